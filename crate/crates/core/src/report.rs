//! Report rows, CSV output and markdown summaries.

use serde::Serialize;

use crate::check::Check;

/// One checked inequality on one instance of one suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub suite: String,
    pub instance: String,
    pub theorem: String,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub runtime_ms: u64,
}

impl ReportRow {
    pub fn from_check(suite: &str, instance: &str, c: &Check) -> Self {
        Self {
            suite: suite.to_owned(),
            instance: instance.to_owned(),
            theorem: c.theorem.clone(),
            inequality: c.inequality.clone(),
            lhs: c.lhs,
            rhs: c.rhs,
            slack: c.slack,
            pass: c.pass,
            runtime_ms: 0,
        }
    }
}

/// Rows of a run plus the settings that produced them.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub rows: Vec<ReportRow>,
}

const HEADER: [&str; 9] = [
    "suite",
    "instance",
    "theorem",
    "inequality",
    "lhs",
    "rhs",
    "slack",
    "pass",
    "runtime_ms",
];

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

impl Report {
    pub fn new(seed: u64) -> Self {
        Self { seed, rows: Vec::new() }
    }

    pub fn push_checks(&mut self, suite: &str, instance: &str, checks: &[Check], runtime_ms: u64) {
        for c in checks {
            let mut row = ReportRow::from_check(suite, instance, c);
            row.runtime_ms = runtime_ms;
            self.rows.push(row);
        }
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    fn write_csv(&self, with_runtime: bool) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let cols = if with_runtime { HEADER.len() } else { HEADER.len() - 1 };
        w.write_record(&HEADER[..cols]).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![
                r.suite.clone(),
                r.instance.clone(),
                r.theorem.clone(),
                r.inequality.clone(),
                num(r.lhs),
                num(r.rhs),
                num(r.slack),
                r.pass.to_string(),
            ];
            if with_runtime {
                rec.push(r.runtime_ms.to_string());
            }
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    /// RFC 4180 CSV with a runtime column.
    pub fn to_csv(&self) -> String {
        self.write_csv(true)
    }

    /// The CSV without runtimes; identical across runs with the same seed.
    pub fn body_csv(&self) -> String {
        self.write_csv(false)
    }

    /// Per-suite pass counts, runtime and the failing rows.
    pub fn markdown_summary(&self) -> String {
        let mut suites: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !suites.contains(&r.suite.as_str()) {
                suites.push(&r.suite);
            }
        }
        let mut out = format!("# hintlock report\n\nseed: {}\n\n", self.seed);
        out.push_str("| suite | checks | passed | runtime ms |\n|---|---|---|---|\n");
        for s in &suites {
            let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.suite == *s).collect();
            let passed = rows.iter().filter(|r| r.pass).count();
            // Rows of one instance share its runtime.
            let mut seen: Vec<&str> = Vec::new();
            let mut ms = 0;
            for r in &rows {
                if !seen.contains(&r.instance.as_str()) {
                    seen.push(&r.instance);
                    ms += r.runtime_ms;
                }
            }
            out.push_str(&format!("| {s} | {} | {passed} | {ms} |\n", rows.len()));
        }
        let failures: Vec<&ReportRow> = self.failures().collect();
        if failures.is_empty() {
            out.push_str("\nAll checks pass.\n");
        } else {
            out.push_str("\n## Failures\n\n| suite | instance | inequality | lhs | rhs | slack |\n|---|---|---|---|---|---|\n");
            for r in failures {
                out.push_str(&format!(
                    "| {} | {} | {}/{} | {} | {} | {} |\n",
                    r.suite,
                    r.instance,
                    r.theorem,
                    r.inequality,
                    num(r.lhs),
                    num(r.rhs),
                    num(r.slack)
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new(7);
        r.push_checks(
            "s",
            "a, \"quoted\"",
            &[Check::at_most("t", "i", 1.0, 2.0), Check::at_least("t", "j", f64::NEG_INFINITY, 0.0)],
            12,
        );
        r
    }

    #[test]
    fn csv_quotes_and_terminators() {
        let text = sample().to_csv();
        let lines: Vec<&str> = text.split("\r\n").collect();
        assert_eq!(lines[0], "suite,instance,theorem,inequality,lhs,rhs,slack,pass,runtime_ms");
        assert_eq!(lines[1], "s,\"a, \"\"quoted\"\"\",t,i,1,2,1,true,12");
        assert_eq!(lines[2], "s,\"a, \"\"quoted\"\"\",t,j,-inf,0,-inf,false,12");
        assert!(!sample().body_csv().contains("runtime"));
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rd.records().count(), 2);
    }

    #[test]
    fn summary_lists_failures() {
        let s = sample();
        assert!(!s.all_pass());
        let md = s.markdown_summary();
        assert!(md.contains("| s | 2 | 1 | 12 |"));
        assert!(md.contains("## Failures"));
    }
}
