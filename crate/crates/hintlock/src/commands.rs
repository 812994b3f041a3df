use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};

use hintlock_core::check::Check;
use hintlock_core::distortion::{
    brute_optimal_distortion_guesser, rd_conversion_checks, rd_side_info_checks, subset_optimal_distortion_guesser,
    DistortionError, RdProblem,
};
use hintlock_core::exponents::{rd_exponent_functional, rd_function, rd_privacy_exponent, RdControls};
use hintlock_core::guessing::{
    arikan_bounds, ceil_moment, guess_moment, moment_entropy, optimal_guesser, optimal_moment, side_info_encoder,
    side_info_lower_bound, side_info_upper_bound,
};
use hintlock_core::mds::bounds::{choose_pr, disk_exponents};
use hintlock_core::mds::delta::{build_delta_scheme, verify_disk_theorems, DiskLayout};
use hintlock_core::prob::{renyi_cond_entropy, JointPmf, RenyiOrder};
use hintlock_core::report::Report;
use hintlock_core::scheme::twohint::{
    build_two_hint, choose_triple, scale_hint_checks, two_hint_exponents, verify_finite_blocklength, ExponentValue,
    Triple,
};
use hintlock_core::suites::{run_suite, SuiteConfig, SUITES};
use hintlock_core::task::{
    ceil_guess_moment, decoding_lists, encoder_from_guessing, encoder_list_moment, guessing_from_lists, list_bounds,
    list_moment, optimal_task_encoder, scale_count, EncoderLaw,
};

use crate::config::{ExponentQuery, ExperimentConfig, VersionChoice};

/// Settings shared by every subcommand after flags and config are merged.
pub struct Run<'a> {
    pub cfg: &'a ExperimentConfig,
    pub base: &'a Path,
    pub seed: u64,
    pub budget: u64,
    pub rational: bool,
}

/// A finished command: a CSV document plus, for checked commands, the
/// report behind it.
pub struct Output {
    pub csv: String,
    pub report: Option<Report>,
}

fn ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

impl Run<'_> {
    fn joint(&self) -> Result<JointPmf> {
        self.cfg.joint(self.base, self.rational)
    }

    fn checked(&self, report: Report, no_runtime: bool) -> Output {
        let csv = if no_runtime { report.body_csv() } else { report.to_csv() };
        Output {
            csv,
            report: Some(report),
        }
    }

    pub fn entropy(&self) -> Result<Output> {
        let j = self.joint()?;
        let alphas = self.cfg.alphas.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0]);
        let mut rows = Vec::new();
        for a in alphas {
            let order = RenyiOrder::new(a).with_context(|| format!("field `alphas`: {a}"))?;
            rows.push(vec![num(a), num(renyi_cond_entropy(&j, order))]);
        }
        Ok(Output {
            csv: table(&["alpha", "renyi_cond_entropy_bits"], rows),
            report: None,
        })
    }

    pub fn guess(&self, no_runtime: bool) -> Result<Output> {
        let j = self.joint()?;
        let mut rep = Report::new(self.seed);
        let zs = self.cfg.z_counts.clone().unwrap_or_else(|| vec![2, 4]);
        for rho in self.cfg.rhos() {
            let t = Instant::now();
            let m = optimal_moment(&j, rho);
            let b = arikan_bounds(&j, rho);
            let mut checks = vec![
                Check::at_least("optimal-guessing", "lower", m, b.lower),
                Check::at_most("optimal-guessing", "upper", m, b.upper),
            ];
            for &z in &zs {
                let built = optimal_moment(&side_info_encoder(&j, z).augment(&j), rho);
                let tag = |s: &str| format!("{s}:z={z}");
                checks.push(Check::close("side-information", &tag("encoder-attains-ceiling"), built, ceil_moment(&j, z, rho), 1e-12));
                checks.push(Check::at_least("side-information", &tag("floor"), built, side_info_lower_bound(&j, z, rho)));
                checks.push(Check::at_most("side-information", &tag("ceiling"), built, side_info_upper_bound(&j, z, rho)));
            }
            rep.push_checks("guess", &format!("rho={rho}"), &checks, ms(t));
        }
        Ok(self.checked(rep, no_runtime))
    }

    pub fn task(&self, no_runtime: bool) -> Result<Output> {
        let j = self.joint()?;
        let nx = j.n_x();
        let mut rep = Report::new(self.seed);
        let zs = self.cfg.z_counts.clone().unwrap_or_else(|| vec![2, 4, 8]);
        let g = optimal_guesser(&j);
        for rho in self.cfg.rhos() {
            let t = Instant::now();
            let mut checks = Vec::new();
            for &z in &zs {
                let got = encoder_list_moment(&optimal_task_encoder(&j, z, rho), &j, rho);
                let b = list_bounds(&j, z, rho);
                checks.push(Check::at_least("task-encoding", &format!("converse:z={z}"), got, b.converse));
                if let Some(a) = b.achievability {
                    checks.push(Check::at_most("task-encoding", &format!("achievability:z={z}"), got, a));
                }
            }
            for omega in 1..=nx {
                let z = omega * scale_count(nx, omega);
                let enc = encoder_from_guessing(&g, omega, z)?;
                let lists = decoding_lists(&enc, &j)?;
                let lm = list_moment(&lists, &j, &enc, rho);
                checks.push(Check::at_most(
                    "lists-from-guessing",
                    &format!("omega={omega}"),
                    lm,
                    ceil_guess_moment(&g, &j, omega, rho),
                ));
                let back = guessing_from_lists(&lists, &j)?;
                checks.push(Check::at_most(
                    "guessing-from-lists",
                    &format!("omega={omega}"),
                    guess_moment(&back, &j, rho)?,
                    (z as f64).powf(rho) * lm,
                ));
            }
            rep.push_checks("task", &format!("rho={rho}"), &checks, ms(t));
        }
        Ok(self.checked(rep, no_runtime))
    }

    pub fn twohint(&self, no_runtime: bool) -> Result<Output> {
        let j = self.joint()?;
        let p = self.cfg.twohint.as_ref().context("field `twohint`: required by this command")?;
        let mut rep = Report::new(self.seed);
        for v in self.cfg.versions(VersionChoice::Both) {
            for rho in self.cfg.rhos() {
                let triples: Vec<Triple> = match (&p.triples, p.u_bound) {
                    (Some(ts), _) => ts.iter().map(|t| Triple::new(t[0], t[1], t[2])).collect(),
                    (None, Some(u)) => {
                        vec![choose_triple(u, p.m1, p.m2, moment_entropy(&j, rho), rho, v, j.n_x())?.triple]
                    }
                    (None, None) => Triple::admissible(p.m1, p.m2, j.n_x(), v),
                };
                for tr in triples {
                    let t = Instant::now();
                    let s = build_two_hint(&j, tr, p.m1, p.m2, v, rho)?;
                    let r = verify_finite_blocklength(&s, &j, rho, self.budget)?;
                    let mut checks = r.checks;
                    if let Some(u) = p.u_bound {
                        checks.push(Check::at_most("two-hint", "bob-below-target", r.bob, u));
                    }
                    checks.extend(scale_hint_checks(&s.realization, rho, self.budget)?);
                    let id = format!("{v:?}:rho={rho}:({},{},{})", tr.cs, tr.c1, tr.c2);
                    rep.push_checks("twohint", &id, &checks, ms(t));
                }
            }
        }
        Ok(self.checked(rep, no_runtime))
    }

    pub fn disks(&self, no_runtime: bool) -> Result<Output> {
        let j = self.joint()?;
        let d = self.cfg.disks.as_ref().context("field `disks`: required by this command")?;
        let mut rep = Report::new(self.seed);
        for v in self.cfg.versions(VersionChoice::Guessing) {
            for rho in self.cfg.rhos() {
                let t = Instant::now();
                let (p, r, floor) = match (d.p, d.r, d.u_bound) {
                    (Some(p), Some(r), _) => (p, r, None),
                    (None, None, Some(u)) => {
                        let c = choose_pr(u, d.s, d.nu, d.eta, d.delta, moment_entropy(&j, rho), rho, v, j.n_x())?;
                        (c.p, c.r, Some((u, c.eve_floor)))
                    }
                    _ => bail!("field `disks`: give both `p` and `r`, or `u_bound`"),
                };
                let layout = DiskLayout {
                    delta: d.delta,
                    nu: d.nu,
                    eta: d.eta,
                    s: d.s,
                    p,
                    r,
                };
                let s = build_delta_scheme(&j, layout, v, rho)?;
                let rpt = verify_disk_theorems(&s, &j, rho, self.budget)?;
                let mut checks = rpt.checks;
                if let Some((u, eve_floor)) = floor {
                    let bob = rpt.bob.exact.unwrap_or(rpt.bob.upper);
                    checks.push(Check::at_most("disks", "bob-below-target", bob, u));
                    checks.push(Check::at_least("disks", "eve-above-chosen-floor", rpt.eve.lower, eve_floor));
                }
                rep.push_checks("disks", &format!("{v:?}:rho={rho}:p={p}:r={r}"), &checks, ms(t));
            }
        }
        Ok(self.checked(rep, no_runtime))
    }

    pub fn distortion(&self, no_runtime: bool) -> Result<Output> {
        let j = self.joint()?;
        let d = self.cfg.distortion.as_ref().context("field `distortion`: required by this command")?;
        let spec = self.cfg.distortion_spec(self.base, j.n_x())?;
        let problem = RdProblem::new(&j, &spec, d.n, self.budget)?;
        let mut rep = Report::new(self.seed);
        for rho in self.cfg.rhos() {
            let t = Instant::now();
            let (sf, moment) = match brute_optimal_distortion_guesser(&problem, rho, self.budget) {
                Ok(found) => found,
                Err(DistortionError::Budget { .. }) => subset_optimal_distortion_guesser(&problem, rho, self.budget)?,
                Err(e) => return Err(e.into()),
            };
            let (_, side) = rd_side_info_checks(&sf, &problem, d.z_count, rho, self.budget)?;
            // The list encoder needs room for omega remainders at every scale.
            let list_z = d.omega * scale_count(problem.n_xhat(), d.omega);
            let conv = rd_conversion_checks(&sf, &problem, d.omega, list_z, rho)?;
            let mut checks = vec![Check::at_least("distortion-guessing", "moment-at-least-one", moment, 1.0)];
            checks.extend(side.checks);
            checks.extend(conv.checks);
            rep.push_checks("distortion", &format!("rho={rho}:n={}:level={}", d.n, d.level), &checks, ms(t));
        }
        Ok(self.checked(rep, no_runtime))
    }

    /// Closed-form and numeric exponent queries, one row each, plus the
    /// witness laws requested with `dump_witness`.
    pub fn exponent(&self) -> Result<(Output, Vec<(usize, String)>)> {
        if self.cfg.exponent.is_empty() {
            bail!("field `exponent`: at least one query is required");
        }
        let ctl = RdControls {
            seed: self.seed,
            ..RdControls::default()
        };
        let closed = |e: ExponentValue| vec![num(e.value), String::new(), String::new(), e.undetermined.to_string(), String::new()];
        let mut rows = Vec::new();
        let mut witnesses = Vec::new();
        for (i, q) in self.cfg.exponent.iter().enumerate() {
            let (kind, mut cells) = match *q {
                ExponentQuery::TwoHint { r1, r2, rho, entropy_rate, e_bob } => {
                    ("two-hint", closed(two_hint_exponents(r1, r2, rho, entropy_rate, e_bob)))
                }
                ExponentQuery::Disks { rate_s, nu, eta, rho, entropy_rate, e_bob } => {
                    ("disks", closed(disk_exponents(rate_s, nu, eta, rho, entropy_rate, e_bob)))
                }
                ExponentQuery::RdPrivacy { r1, r2, rho, functional, e_bob } => {
                    ("rd-privacy", closed(rd_privacy_exponent(r1, r2, rho, functional, e_bob)))
                }
                ExponentQuery::RdFunction { level } => {
                    let j = self.joint()?;
                    let spec = self.cfg.spec_at(self.base, j.n_x(), level)?;
                    let r = rd_function(&j, &spec, &ctl)?;
                    ("rd-function", vec![num(r.value), num(r.lower), num(r.upper), "false".into(), String::new()])
                }
                ExponentQuery::RdFunctional { level, rho, dump_witness } => {
                    let j = self.joint()?;
                    let spec = self.cfg.spec_at(self.base, j.n_x(), level)?;
                    let e = rd_exponent_functional(&j, &spec, rho, &ctl)?;
                    if dump_witness {
                        let w = JointPmf::from_table(j.n_x(), j.n_y(), e.witness.clone())?;
                        witnesses.push((i, w.to_json()));
                    }
                    let hash = e.witness_hash();
                    ("rd-functional", vec![num(e.value), num(e.lower), num(e.upper), "false".into(), hash])
                }
            };
            let mut row = vec![i.to_string(), kind.to_string()];
            row.append(&mut cells);
            rows.push(row);
        }
        let csv = table(&["query", "kind", "value", "lower", "upper", "undetermined", "witness_hash"], rows);
        Ok((Output { csv, report: None }, witnesses))
    }

    pub fn verify_all(&self, only: &[String], no_runtime: bool) -> Result<Output> {
        let suites: Vec<String> = if !only.is_empty() {
            only.to_vec()
        } else if let Some(s) = &self.cfg.suites {
            s.clone()
        } else {
            SUITES.iter().map(|s| s.to_string()).collect()
        };
        let cfg = SuiteConfig {
            seed: self.seed,
            budget: self.budget,
        };
        let mut rep = Report::new(self.seed);
        for s in &suites {
            rep.extend(run_suite(s, &cfg).with_context(|| format!("suite {s}"))?);
        }
        Ok(self.checked(rep, no_runtime))
    }
}
