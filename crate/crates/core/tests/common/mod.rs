//! Straight-line PRESENT-80 written bit by bit from the cipher description,
//! sharing no code with the library. Used as an oracle only.

#![allow(dead_code)]

pub const SBOX: [u8; 16] = [0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2];

// Permutation table as printed, P(i) for i = 0..63.
pub const P: [usize; 64] = [
    0, 16, 32, 48, 1, 17, 33, 49, 2, 18, 34, 50, 3, 19, 35, 51, //
    4, 20, 36, 52, 5, 21, 37, 53, 6, 22, 38, 54, 7, 23, 39, 55, //
    8, 24, 40, 56, 9, 25, 41, 57, 10, 26, 42, 58, 11, 27, 43, 59, //
    12, 28, 44, 60, 13, 29, 45, 61, 14, 30, 46, 62, 15, 31, 47, 63,
];

pub fn bits64(x: u64) -> [u8; 64] {
    std::array::from_fn(|i| ((x >> i) & 1) as u8)
}

pub fn from_bits64(b: &[u8; 64]) -> u64 {
    b.iter().enumerate().map(|(i, &v)| u64::from(v) << i).sum()
}

pub fn bits80(x: u128) -> [u8; 80] {
    std::array::from_fn(|i| ((x >> i) & 1) as u8)
}

pub fn from_bits80(b: &[u8; 80]) -> u128 {
    b.iter().enumerate().map(|(i, &v)| u128::from(v) << i).sum()
}

/// k[i] holds register bit k_i.
pub fn oracle_update(k: &[u8; 80], rc: u8) -> [u8; 80] {
    // Step 1: [k79 .. k0] = [k18 k17 .. k20 k19].
    let mut n = [0u8; 80];
    for i in 0..80 {
        n[i] = k[(i + 19) % 80];
    }
    // Step 2: S-box on k79..k76.
    let top = n[76] | n[77] << 1 | n[78] << 2 | n[79] << 3;
    let s = SBOX[top as usize];
    for b in 0..4 {
        n[76 + b] = (s >> b) & 1;
    }
    // Step 3: k19..k15 ^= rc.
    for b in 0..5 {
        n[15 + b] ^= (rc >> b) & 1;
    }
    n
}

pub fn oracle_round_keys(key: u128) -> Vec<u64> {
    let mut k = bits80(key);
    let mut keys = Vec::with_capacity(32);
    for rc in 1..=32u8 {
        let mut rk = [0u8; 64];
        rk.copy_from_slice(&k[16..80]);
        keys.push(from_bits64(&rk));
        if rc <= 31 {
            k = oracle_update(&k, rc);
        }
    }
    keys
}

pub fn oracle_encrypt(pt: u64, key: u128) -> u64 {
    let keys = oracle_round_keys(key);
    let mut state = bits64(pt);
    for rk in keys.iter().take(31) {
        let rkb = bits64(*rk);
        for i in 0..64 {
            state[i] ^= rkb[i];
        }
        let mut subbed = [0u8; 64];
        for j in 0..16 {
            let x = state[4 * j] | state[4 * j + 1] << 1 | state[4 * j + 2] << 2 | state[4 * j + 3] << 3;
            let y = SBOX[x as usize];
            for b in 0..4 {
                subbed[4 * j + b] = (y >> b) & 1;
            }
        }
        let mut permuted = [0u8; 64];
        for i in 0..64 {
            permuted[P[i]] = subbed[i];
        }
        state = permuted;
    }
    from_bits64(&state) ^ keys[31]
}

/// Brute-force candidate set of S-box inputs for `mask` and output difference `delta`.
pub fn brute_candidates(mask: u8, delta: u8) -> Vec<u8> {
    (0..16u8)
        .filter(|&i| SBOX[i as usize] ^ SBOX[(i ^ mask) as usize] == delta)
        .collect()
}
