//! Trace CSVs. Floats use `{:.16e}`, i.e. 17 significant digits, which
//! round-trips every `f64`.

use std::io::{self, Write};

use cema_core::{NodeKind, RunResult, Scenario};

pub const TRACE_HEADER: &str = "k,node_id,kind,lambda,P,xi";
pub const SUMMARY_HEADER: &str = "k,mismatch,lambda_spread,max_abs_xi";

fn kind_name(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Generator => "generator",
        NodeKind::Consumer => "consumer",
    }
}

/// One row per recorded round and node.
pub fn write_trace<W: Write>(out: &mut W, s: &Scenario, r: &RunResult) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for rec in &r.trace {
        for (i, (node, kind)) in rec.nodes.iter().zip(s.graph.kinds()).enumerate() {
            writeln!(
                out,
                "{},{},{},{:.16e},{:.16e},{:.16e}",
                rec.k,
                i,
                kind_name(*kind),
                node.lambda,
                node.power,
                node.surplus
            )?;
        }
    }
    Ok(())
}

/// One row per recorded round.
pub fn write_summary<W: Write>(out: &mut W, r: &RunResult) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for rec in &r.trace {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e}", rec.k, rec.mismatch, rec.lambda_spread, rec.max_abs_xi)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use cema_core::presets::table1;
    use cema_core::{run_with, RunOptions, Variant};

    #[test]
    fn rows_round_trip() {
        let s = table1();
        let r = run_with(&s, Variant::Corrected, &RunOptions { trace_stride: 50 }).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &s, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 1 + 4 * r.trace.len());

        let last = lines.last().unwrap().split(',').collect::<Vec<_>>();
        assert_eq!(last[0], r.rounds.to_string());
        assert_eq!(last[1], "3");
        assert_eq!(last[2], "consumer");
        let fin = r.final_states[3];
        assert_eq!(last[3].parse::<f64>().unwrap(), fin.lambda);
        assert_eq!(last[4].parse::<f64>().unwrap(), fin.power);
        assert_eq!(last[5].parse::<f64>().unwrap(), fin.surplus);
    }

    #[test]
    fn summary_rows() {
        let s = table1();
        let r = run_with(&s, Variant::Original, &RunOptions { trace_stride: 100 }).unwrap();
        let mut buf = Vec::new();
        write_summary(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + r.trace.len());
        assert!(text.lines().nth(1).unwrap().starts_with("0,"));
    }
}
