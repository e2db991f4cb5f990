//! CSV and markdown renderings of the efficiency grids.
//!
//! CSV carries full precision (shortest round-trip representation) and
//! spells infinite degrees of freedom `inf`; markdown rounds to three
//! decimals and uses `∞`.

use std::fmt::Write;

use mvindep::efficiency::{nu_label, AreTable, BoundResult, BoundTable};

fn csv_nu(nu: f64) -> String {
    if nu.is_infinite() {
        "inf".to_string()
    } else {
        format!("{nu}")
    }
}

pub fn are_csv(t: &AreTable) -> String {
    let mut out = String::from("p,q,nu_q,nu_p,are\n");
    for (q, nq, np, v) in t.cells() {
        writeln!(out, "{},{q},{},{},{v:?}", t.p, csv_nu(nq), csv_nu(np)).unwrap();
    }
    out
}

pub fn are_markdown(t: &AreTable) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "ARE of the {} test against Wilks' test, p = {}",
        t.method, t.p
    )
    .unwrap();
    writeln!(out).unwrap();
    let mut head = String::from("| q | ν_q |");
    let mut rule = String::from("|---|---|");
    for &np in &t.nus {
        write!(head, " ν_p = {} |", nu_label(np)).unwrap();
        rule.push_str("---:|");
    }
    writeln!(out, "{head}\n{rule}").unwrap();
    for (i, &q) in t.dims.iter().enumerate() {
        for (j, &nq) in t.nus.iter().enumerate() {
            let q_cell = if j == 0 { q.to_string() } else { String::new() };
            write!(out, "| {q_cell} | {} |", nu_label(nq)).unwrap();
            for v in &t.values[i][j] {
                write!(out, " {v:.3} |").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn bound_csv(t: &BoundTable) -> String {
    let mut out = String::from("p,q,c_p,c_q,omega_p,omega_q,bound\n");
    for e in &t.entries {
        writeln!(
            out,
            "{},{},{:?},{:?},{:?},{:?},{:?}",
            e.p, e.q, e.c_p, e.c_q, e.omega_p, e.omega_q, e.bound
        )
        .unwrap();
    }
    out
}

pub fn bound_markdown(t: &BoundTable) -> String {
    let mut out = String::from("Hodges–Lehmann lower bound for the Wilcoxon test\n\n| p/q |");
    let mut rule = String::from("|---|");
    for &q in &t.dims {
        write!(out, " {q} |").unwrap();
        rule.push_str("---:|");
    }
    writeln!(out, "\n{rule}").unwrap();
    for &p in &t.dims {
        write!(out, "| {p} |").unwrap();
        for &q in &t.dims {
            match t.get(p, q) {
                Some(b) if q >= p => write!(out, " {b:.3} |").unwrap(),
                _ => out.push_str("  |"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn trend_markdown(rows: &[BoundResult]) -> String {
    let mut out = String::from(
        "Diagonal bounds (k, k); outside the published grid\n\n| k | c_k | ω_k | bound |\n|---|---:|---:|---:|\n",
    );
    for r in rows {
        writeln!(
            out,
            "| {} | {:.6} | {:.6} | {:.3} |",
            r.p, r.c_p, r.omega_p, r.bound
        )
        .unwrap();
    }
    out
}
