//! Stable LSD radix argsort on `u64` keys, 8 bits per pass.

const RADIX_BITS: u32 = 8;
const BUCKETS: usize = 1 << RADIX_BITS;

/// Returns the stable ascending permutation of `keys`, i.e. `keys[perm[k]]`
/// is non-decreasing and equal keys keep their input order.
///
/// Only the low `key_bits` bits are examined, which takes `ceil(key_bits / 8)`
/// passes; bits above that must be zero.
pub fn argsort_u64(keys: &[u64], key_bits: u32) -> Vec<u32> {
    let n = keys.len();
    assert!(n <= u32::MAX as usize, "argsort_u64 supports at most 2^32 keys");
    debug_assert!(key_bits >= 64 || keys.iter().all(|&k| k >> key_bits == 0));

    let mut perm: Vec<u32> = (0..n as u32).collect();
    if n <= 1 {
        return perm;
    }
    let mut cur: Vec<u64> = keys.to_vec();
    let mut tmp_keys = vec![0u64; n];
    let mut tmp_perm = vec![0u32; n];

    let passes = key_bits.min(64).div_ceil(RADIX_BITS);
    for pass in 0..passes {
        let shift = pass * RADIX_BITS;
        let mut counts = [0usize; BUCKETS];
        for &k in &cur {
            counts[((k >> shift) as usize) & (BUCKETS - 1)] += 1;
        }
        // One bucket holding everything means this digit is constant.
        if counts.contains(&n) {
            continue;
        }
        let mut sum = 0;
        for c in counts.iter_mut() {
            let here = *c;
            *c = sum;
            sum += here;
        }
        for (&k, &p) in cur.iter().zip(&perm) {
            let d = ((k >> shift) as usize) & (BUCKETS - 1);
            let at = counts[d];
            tmp_keys[at] = k;
            tmp_perm[at] = p;
            counts[d] = at + 1;
        }
        std::mem::swap(&mut cur, &mut tmp_keys);
        std::mem::swap(&mut perm, &mut tmp_perm);
    }
    perm
}
