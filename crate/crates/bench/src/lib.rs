//! Shared problem sizes for the benchmarks.

/// `(n, r)` pairs for the density tables, small to large.
pub const TABLE_SIZES: [(usize, usize); 4] = [
    (1_000, 10),
    (10_000, 100),
    (100_000, 1_000),
    (1_000_000, 1_000),
];

/// `(n, r)` pairs for the exact distance series.
pub const DTV_SIZES: [(usize, usize); 3] = [(1_000, 500), (10_000, 5_000), (100_000, 50_000)];

/// `u` values for `H(u)`.
pub const H_ARGUMENTS: [f64; 4] = [1.5, 3.0, 8.0, 20.0];
