//! Debug export in the SDPA sparse format (`.dat-s`), readable by SDPA, CSDP,
//! SeDuMi's `fromsdpa` and most other conic solvers.
//!
//! SDPA solves `max bᵀy  s.t.  Σ_i F_i y_i − F_0 ⪰ 0`. With `y = x` the
//! mapping is `b = −c`, `F_i = A_i`, `F_0 = −B`. Box bounds and equalities
//! are appended as one diagonal (LP) block; an equality becomes two opposite
//! inequalities. The reported optimum is therefore `−(cᵀx)`.
//!
//! Layout, one item per line:
//!
//! ```text
//! "comment"
//! m                 number of variables
//! nblocks
//! k_1 k_2 ... -l    block sizes (negative = diagonal block)
//! b_1 ... b_m
//! i blk row col v   nonzeros of F_i, upper triangle, 1-based indices
//! ```

use std::fmt::Write;

use crate::program::ConeProgram;

pub fn to_sdpa(program: &ConeProgram) -> String {
    let n = program.num_vars();
    let mut out = String::new();
    let _ = writeln!(out, "\"conesolver export: n={n}, min c'x == max -c'x\"");
    let _ = writeln!(out, "{n}");

    // diagonal block rows: (coefficient per var, constant)
    let mut diag_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for i in 0..n {
        if program.lower[i].is_finite() {
            diag_rows.push((vec![(i, 1.0)], program.lower[i]));
        }
        if program.upper[i].is_finite() {
            diag_rows.push((vec![(i, -1.0)], -program.upper[i]));
        }
    }
    for eq in &program.linear_eq {
        diag_rows.push((eq.coeffs.clone(), eq.rhs));
        diag_rows.push((eq.coeffs.iter().map(|(i, v)| (*i, -v)).collect(), -eq.rhs));
    }

    let mut sizes: Vec<String> = program.psd_blocks.iter().map(|b| b.dim.to_string()).collect();
    if !diag_rows.is_empty() {
        sizes.push(format!("-{}", diag_rows.len()));
    }
    let _ = writeln!(out, "{}", sizes.len());
    let _ = writeln!(out, "{}", sizes.join(" "));
    let b: Vec<String> = program.objective.iter().map(|c| format!("{:e}", -c)).collect();
    let _ = writeln!(out, "{}", b.join(" "));

    for (j, block) in program.psd_blocks.iter().enumerate() {
        for &(r, c, v) in block.constant.entries() {
            let _ = writeln!(out, "0 {} {} {} {:e}", j + 1, c + 1, r + 1, -v);
        }
        for (var, m) in &block.terms {
            for &(r, c, v) in m.entries() {
                let _ = writeln!(out, "{} {} {} {} {:e}", var + 1, j + 1, c + 1, r + 1, v);
            }
        }
    }
    let lp_block = program.psd_blocks.len() + 1;
    for (row, (coeffs, constant)) in diag_rows.iter().enumerate() {
        if *constant != 0.0 {
            let _ = writeln!(out, "0 {lp_block} {} {} {:e}", row + 1, row + 1, constant);
        }
        for (var, v) in coeffs {
            let _ = writeln!(out, "{} {lp_block} {} {} {:e}", var + 1, row + 1, row + 1, v);
        }
    }
    out
}
