//! Per-client, per-direction communication accounting.

use serde::{Deserialize, Serialize};

use crate::protocol::ProtocolKind;

fn default_bits() -> u32 {
    32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommSpec {
    pub protocol: ProtocolKind,
    pub u_size: u64,
    pub num_classes: u64,
    /// Model size for FedAvg.
    pub parameter_count: u64,
    #[serde(default = "default_bits")]
    pub bits_per_parameter: u32,
    pub rounds: u64,
    pub period: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommCost {
    pub bytes_per_round: u64,
    pub total_bytes: u64,
    pub communication_rounds: u64,
    /// Label messages packed at `ceil(log2 C)` bits per example; informational.
    pub packed_bytes_per_round: Option<u64>,
}

fn bits_to_bytes(bits: u64) -> u64 {
    bits.div_ceil(8)
}

fn label_bits(classes: u64) -> u64 {
    (64 - (classes.max(2) - 1).leading_zeros()) as u64
}

/// Bytes one client sends per communication round and over the run. Label
/// sharing sends the one-hot `C × |U|` bit matrix; FedAvg sends every
/// parameter. Local-only and centralized training send nothing, and PATE
/// sends one label message in total.
pub fn communication_cost(spec: &CommSpec) -> CommCost {
    let comm_rounds = spec.rounds.checked_div(spec.period).unwrap_or(0);
    let labels = bits_to_bytes(spec.num_classes * spec.u_size);
    let packed = bits_to_bytes(label_bits(spec.num_classes) * spec.u_size);
    let (per_round, rounds, packed) = match spec.protocol {
        ProtocolKind::Fedct | ProtocolKind::DpFedct => (labels, comm_rounds, Some(packed)),
        ProtocolKind::Fedavg => {
            (bits_to_bytes(spec.parameter_count * spec.bits_per_parameter as u64), comm_rounds, None)
        }
        ProtocolKind::Pate => (labels, 1, Some(packed)),
        ProtocolKind::LocalOnly | ProtocolKind::Centralized => (0, comm_rounds, None),
    };
    CommCost { bytes_per_round: per_round, total_bytes: per_round * rounds, communication_rounds: rounds, packed_bytes_per_round: packed }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(protocol: ProtocolKind) -> CommSpec {
        CommSpec { protocol, u_size: 10_000, num_classes: 10, parameter_count: 669_706, bits_per_parameter: 32, rounds: 100, period: 1 }
    }

    #[test]
    fn label_sharing_bytes() {
        let c = communication_cost(&spec(ProtocolKind::Fedct));
        assert_eq!(c.bytes_per_round, 12_500);
        assert_eq!(c.total_bytes, 1_250_000);
        assert_eq!(c.packed_bytes_per_round, Some(5_000));
    }

    #[test]
    fn fedavg_bytes() {
        assert_eq!(communication_cost(&spec(ProtocolKind::Fedavg)).bytes_per_round, 2_678_824);
    }

    #[test]
    fn silent_protocols() {
        assert_eq!(communication_cost(&spec(ProtocolKind::LocalOnly)).total_bytes, 0);
        assert_eq!(communication_cost(&spec(ProtocolKind::Pate)).total_bytes, 12_500);
    }

    #[test]
    fn linear_in_rounds_and_pool() {
        let base = communication_cost(&CommSpec { u_size: 80, rounds: 7, period: 2, ..spec(ProtocolKind::Fedct) });
        let twice_u = communication_cost(&CommSpec { u_size: 160, rounds: 7, period: 2, ..spec(ProtocolKind::Fedct) });
        let twice_t = communication_cost(&CommSpec { u_size: 80, rounds: 13, period: 2, ..spec(ProtocolKind::Fedct) });
        assert_eq!(base.communication_rounds, 3);
        assert_eq!(twice_u.total_bytes, 2 * base.total_bytes);
        assert_eq!(twice_t.total_bytes, 2 * base.total_bytes);
    }

    #[test]
    fn packed_width() {
        assert_eq!(label_bits(2), 1);
        assert_eq!(label_bits(3), 2);
        assert_eq!(label_bits(10), 4);
        assert_eq!(label_bits(16), 4);
        assert_eq!(label_bits(17), 5);
    }
}
