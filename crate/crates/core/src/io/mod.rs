//! FROSTT `.tns` tensors, factor files and convergence traces.

mod tns;
mod trace;

use sha2::{Digest, Sha256};

pub use tns::{parse_tns, parse_tns_str, read_factors, tns_string, write_factors, write_tns};
pub use trace::{parse_trace, parse_trace_str, trace_csv, write_trace};

use crate::tensor::SparseTensor;

/// SHA-256 over the extents, keys and value bits of `t`, as lowercase hex.
pub fn fingerprint(t: &SparseTensor) -> String {
    let mut h = Sha256::new();
    for &d in t.shape().dims() {
        h.update((d as u64).to_le_bytes());
    }
    for (&k, &v) in t.keys().iter().zip(t.values()) {
        h.update(k.to_le_bytes());
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
