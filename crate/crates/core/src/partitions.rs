//! Set partitions of {0, .., n-1}: enumeration by restricted growth strings
//! and counting with a cap on block size.

/// All partitions of an n-element set, each as a list of blocks holding
/// element indices. n = 0 yields the single empty partition.
pub fn enumerate(n: usize) -> Vec<Vec<Vec<usize>>> {
    assert!(n <= 12, "partition enumeration is intended for small n");
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        out.push(rgs_to_blocks(&rgs));
        // next restricted growth string: rgs[i] may rise to 1 + max of prefix
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            let cap = rgs[..i].iter().copied().max().map_or(0, |m| m + 1);
            if rgs[i] < cap {
                rgs[i] += 1;
                for slot in rgs[i + 1..].iter_mut() {
                    *slot = 0;
                }
                break;
            }
        }
    }
}

fn rgs_to_blocks(rgs: &[usize]) -> Vec<Vec<usize>> {
    let nblocks = rgs.iter().copied().max().map_or(0, |m| m + 1);
    let mut blocks = vec![Vec::new(); nblocks];
    for (elem, &b) in rgs.iter().enumerate() {
        blocks[b].push(elem);
    }
    blocks
}

/// Number of partitions of an n-element set in which every block has at
/// most `max_block` elements. Exact for n <= 25 (counts stay below 2^53).
pub fn count_with_max_block(n: usize, max_block: usize) -> u64 {
    assert!(n <= 25, "partition count would overflow the exact integer range");
    if max_block == 0 {
        return (n == 0) as u64;
    }
    // p(m) = sum over the size k of the block containing the first element
    let mut p = vec![0u64; n + 1];
    p[0] = 1;
    for m in 1..=n {
        let mut total = 0u64;
        for k in 1..=m.min(max_block) {
            total += binom_u64(m - 1, k - 1) * p[m - k];
        }
        p[m] = total;
    }
    p[n]
}

fn binom_u64(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for j in 0..k {
        acc = acc * (n - j) as u64 / (j + 1) as u64;
    }
    acc
}
