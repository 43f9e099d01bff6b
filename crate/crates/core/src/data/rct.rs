const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Randomized exposure bucket: FNV-1a of the UTF-8 user id modulo `n_items`.
pub fn rct_assign(user_id: &str, n_items: usize) -> usize {
    assert!(n_items >= 1, "n_items must be at least 1");
    (fnv1a64(user_id.as_bytes()) % n_items as u64) as usize
}
