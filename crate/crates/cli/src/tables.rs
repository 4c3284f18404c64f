//! Table generation and rendering (aligned text and CSV).

use shortdlp::bounds::{
    ffdh_row, optimize_params, optimize_params_with_factor, BoundRow, FfdhRow, RsaRow,
    SearchLimits, RSA_REDUCTION_FACTORS,
};

use crate::tenths_str;

pub const STANDARD_TARGETS: [f64; 11] = [
    0.9,
    0.95,
    0.99,
    0.999,
    1.0 - 1e-4,
    1.0 - 1e-5,
    1.0 - 1e-6,
    1.0 - 1e-7,
    1.0 - 1e-8,
    1.0 - 1e-9,
    1.0 - 1e-10,
];

pub const STANDARD_DELTAS: [u32; 14] = [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120, 130];

/// Safe-prime group sizes with their strength levels (m = 2z) and the three
/// tabulated parameter choices.
pub const FFDH_GROUPS: [(u32, u32); 5] =
    [(2048, 112), (3072, 128), (4096, 152), (6144, 176), (8192, 200)];
pub const FFDH_PARAMS: [(u32, u32, u32, f64); 3] = [
    (70, 7, 37, 0.99),
    (50, 10, 29, 0.999),
    (0, 34, 2, 1.0 - 1e-10),
];

pub const RSA_TARGETS: [f64; 5] = [0.9, 0.95, 0.99, 0.999, 1.0 - 1e-4];

#[derive(Debug, Clone)]
pub struct QueryRow {
    pub delta: u32,
    pub target: f64,
    pub row: Option<BoundRow>,
}

pub fn bounds_query(deltas: &[u32], targets: &[f64], c: u64, limits: SearchLimits) -> Vec<QueryRow> {
    let mut out = Vec::new();
    for &delta in deltas {
        for &target in targets {
            out.push(QueryRow {
                delta,
                target,
                row: optimize_params(delta, target, c, limits),
            });
        }
    }
    out
}

fn fmt_target(t: f64) -> String {
    // print complements compactly: 0.9999 and beyond as 1-1e-k
    let eps = 1.0 - t;
    if eps < 1e-3 - 1e-12 {
        let k = (-eps.log10()).round() as i32;
        if (eps - 10f64.powi(-k)).abs() < 1e-15 {
            return format!("1-1e-{k}");
        }
    }
    format!("{t}")
}

pub fn bounds_text(rows: &[QueryRow]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{:>6} {:>5} {:>4} {:>10} {:>18} {:>9}\n",
        "delta", "tau", "t", "target", "bound", "work"
    ));
    for q in rows {
        match &q.row {
            Some(r) => s.push_str(&format!(
                "{:>6} {:>5} {:>4} {:>10} {:>18.12} {:>9}\n",
                q.delta,
                r.tau,
                r.t,
                fmt_target(q.target),
                r.success_lb,
                format!("<= {}", tenths_str(r.work_tenths)),
            )),
            None => s.push_str(&format!(
                "{:>6} {:>5} {:>4} {:>10} {:>18} {:>9}\n",
                q.delta,
                "-",
                "-",
                fmt_target(q.target),
                "no solution",
                "-"
            )),
        }
    }
    s
}

pub fn bounds_csv(rows: &[QueryRow]) -> String {
    let mut s = String::from("delta,tau,t,target,bound,work_log2\n");
    for q in rows {
        match &q.row {
            Some(r) => s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                q.delta,
                r.tau,
                r.t,
                fmt_target(q.target),
                r.success_lb,
                tenths_str(r.work_tenths)
            )),
            None => s.push_str(&format!(
                "{},,,{},no_solution,\n",
                q.delta,
                fmt_target(q.target)
            )),
        }
    }
    s
}

pub fn ffdh_rows() -> Vec<(FfdhRow, f64)> {
    let mut out = Vec::new();
    for &(l, z) in &FFDH_GROUPS {
        for &(delta, tau, t, target) in &FFDH_PARAMS {
            out.push((ffdh_row(l, z, delta, tau, t), target));
        }
    }
    out
}

pub fn ffdh_text(rows: &[(FfdhRow, f64)]) -> String {
    let mut s = format!(
        "{:>6} {:>5} {:>5} {:>6} {:>5} {:>4} {:>10} {:>9} {:>6} {:>6}\n",
        "l", "z", "m", "delta", "tau", "t", "target", "work", "ops", "adv"
    );
    for (r, target) in rows {
        s.push_str(&format!(
            "{:>6} {:>5} {:>5} {:>6} {:>5} {:>4} {:>10} {:>9} {:>6} {:>6}\n",
            r.l,
            r.z,
            r.m,
            r.row.delta,
            r.row.tau,
            r.row.t,
            fmt_target(*target),
            format!("<= {}", tenths_str(r.row.work_tenths)),
            r.ops_single_run,
            tenths_str(r.advantage_tenths),
        ));
    }
    s
}

pub fn ffdh_csv(rows: &[(FfdhRow, f64)]) -> String {
    let mut s = String::from("l,z,m,delta,tau,t,target,work_log2,ops,advantage\n");
    for (r, target) in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.l,
            r.z,
            r.m,
            r.row.delta,
            r.row.tau,
            r.row.t,
            fmt_target(*target),
            tenths_str(r.row.work_tenths),
            r.ops_single_run,
            tenths_str(r.advantage_tenths),
        ));
    }
    s
}

pub fn rsa_table(c: u64) -> Vec<RsaRow> {
    let mut out = Vec::new();
    for &(delta, factor) in RSA_REDUCTION_FACTORS {
        for &target in &RSA_TARGETS {
            out.push(RsaRow {
                delta,
                factor,
                target,
                row: optimize_params_with_factor(
                    delta,
                    target,
                    factor,
                    c,
                    SearchLimits::default(),
                ),
            });
        }
    }
    out
}

pub fn rsa_text(rows: &[RsaRow]) -> String {
    let mut s = format!(
        "{:>6} {:>5} {:>4} {:>10} {:>10} {:>9}\n",
        "delta", "tau", "t", "target", "factor", "work"
    );
    for r in rows {
        match &r.row {
            Some(b) => s.push_str(&format!(
                "{:>6} {:>5} {:>4} {:>10} {:>10} {:>9}\n",
                r.delta,
                b.tau,
                b.t,
                fmt_target(r.target),
                r.factor,
                format!("<= {}", tenths_str(b.work_tenths)),
            )),
            None => s.push_str(&format!(
                "{:>6} {:>5} {:>4} {:>10} {:>10} {:>9}\n",
                r.delta,
                "-",
                "-",
                fmt_target(r.target),
                r.factor,
                "-"
            )),
        }
    }
    s
}

pub fn rsa_csv(rows: &[RsaRow]) -> String {
    let mut s = String::from("delta,tau,t,target,factor,work_log2\n");
    for r in rows {
        match &r.row {
            Some(b) => s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.delta,
                b.tau,
                b.t,
                fmt_target(r.target),
                r.factor,
                tenths_str(b.work_tenths)
            )),
            None => s.push_str(&format!(
                "{},,,{},{},no_solution\n",
                r.delta,
                fmt_target(r.target),
                r.factor
            )),
        }
    }
    s
}

/// The full general table: every standard delta against every standard
/// target.
pub fn general_table(c: u64) -> Vec<QueryRow> {
    // t up to delta/2 + 34 or so is needed at the largest deltas
    let limits = SearchLimits {
        tau_max: 64,
        t_max: 128,
    };
    bounds_query(&STANDARD_DELTAS, &STANDARD_TARGETS, c, limits)
}
