//! Text reports. Human-readable lines use five decimals; the `[result]`
//! section that follows is `key=value` at full precision and parses back
//! with [`parse_machine`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use unitbound::benefit::{decide, BenefitBounds};
use unitbound::oracle::ContainmentReport;
use unitbound::pns::Binding;
use unitbound::simulation::Study;
use unitbound::{BenefitVector, Interval, Structure};

pub const MACHINE_HEADER: &str = "[result]";

/// Everything a bounds report shows.
#[derive(Debug, Clone)]
pub struct BoundsReport<'a> {
    pub structure: Structure,
    pub bv: BenefitVector,
    pub backdoor: bool,
    pub z_labels: &'a [String],
    pub bounds: &'a BenefitBounds,
    /// Li–Pearl on the margin, shown for comparison in covariate regimes.
    pub baseline: Option<&'a BenefitBounds>,
}

fn fmt5(v: f64) -> String {
    format!("{v:.5}")
}

fn interval5(i: &Interval) -> String {
    format!("[{}, {}]", fmt5(i.lower()), fmt5(i.upper()))
}

fn z_name(labels: &[String], i: usize) -> String {
    labels.get(i).cloned().unwrap_or_else(|| format!("z{i}"))
}

impl BoundsReport<'_> {
    pub fn render(&self) -> String {
        let b = self.bounds;
        let d = decide(&b.interval);
        let mut out = String::new();
        let mut line = |k: &str, v: String| writeln!(out, "{k:<26}{v}").unwrap();
        line("structure", self.structure.to_string());
        line("benefit vector", self.bv.to_string());
        line(
            "back-door adjustment",
            if self.backdoor { "asserted" } else { "no" }.into(),
        );
        line("sigma", fmt5(b.sigma));
        line("W", fmt5(b.w));
        line("PNS lower (L)", fmt5(b.pns.lower()));
        line("PNS upper (U)", fmt5(b.pns.upper()));
        if let Some(t) = b.pns.mediator_term {
            line("mediator term", fmt5(t));
        }
        match &b.pns.binding {
            Binding::Single(terms) => line("binding", terms.to_string()),
            Binding::PerStratum(per) => {
                for (i, terms) in per.iter().enumerate() {
                    let text = terms.map_or("zero weight, skipped".into(), |t| t.to_string());
                    line(&format!("binding [{}]", z_name(self.z_labels, i)), text);
                }
            }
        }
        if b.is_point {
            line(
                "benefit",
                format!("{} (point: sigma = 0)", fmt5(b.interval.lower())),
            );
        } else {
            line("benefit bounds", interval5(&b.interval));
        }
        line("decision (midpoint)", d.midpoint.label().into());
        line("decision (whole interval)", d.whole_interval.label().into());
        if let Some(base) = self.baseline {
            line("Li-Pearl on margin", interval5(&base.interval));
        }
        out.push('\n');
        out.push_str(&self.machine());
        out
    }

    pub fn machine(&self) -> String {
        let b = self.bounds;
        let d = decide(&b.interval);
        let mut pairs: Vec<(&str, String)> = vec![
            ("structure", self.structure.to_string()),
            (
                "benefit",
                format!(
                    "{:?},{:?},{:?},{:?}",
                    self.bv.beta, self.bv.gamma, self.bv.theta, self.bv.delta
                ),
            ),
            ("backdoor", self.backdoor.to_string()),
            ("sigma", format!("{:?}", b.sigma)),
            ("w", format!("{:?}", b.w)),
            ("pns_lower", format!("{:?}", b.pns.lower())),
            ("pns_upper", format!("{:?}", b.pns.upper())),
            ("lower", format!("{:?}", b.interval.lower())),
            ("upper", format!("{:?}", b.interval.upper())),
            ("is_point", b.is_point.to_string()),
            ("decision_midpoint", d.midpoint.label().into()),
            ("decision_whole_interval", d.whole_interval.label().into()),
        ];
        if let Some(t) = b.pns.mediator_term {
            pairs.push(("mediator_term", format!("{t:?}")));
        }
        if let Some(base) = self.baseline {
            pairs.push(("baseline_lower", format!("{:?}", base.interval.lower())));
            pairs.push(("baseline_upper", format!("{:?}", base.interval.upper())));
        }
        let mut out = format!("{MACHINE_HEADER}\n");
        for (k, v) in pairs {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MachineError {
    #[error("no {MACHINE_HEADER} section")]
    MissingSection,
    #[error("line `{0}` is not key=value")]
    BadLine(String),
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("`{key}` is not a number: {value}")]
    NotANumber { key: &'static str, value: String },
}

/// Key/value pairs of the machine section of any report.
pub fn parse_machine(text: &str) -> Result<BTreeMap<String, String>, MachineError> {
    let mut lines = text.lines().skip_while(|l| l.trim() != MACHINE_HEADER);
    if lines.next().is_none() {
        return Err(MachineError::MissingSection);
    }
    lines
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| MachineError::BadLine(l.to_string()))
        })
        .collect()
}

pub fn machine_number(
    map: &BTreeMap<String, String>,
    key: &'static str,
) -> Result<f64, MachineError> {
    let value = map.get(key).ok_or(MachineError::MissingKey(key))?;
    value.parse().map_err(|_| MachineError::NotANumber {
        key,
        value: value.clone(),
    })
}

/// The benefit interval recorded in a report.
pub fn machine_interval(text: &str) -> Result<(f64, f64), MachineError> {
    let map = parse_machine(text)?;
    Ok((
        machine_number(&map, "lower")?,
        machine_number(&map, "upper")?,
    ))
}

pub fn render_study(
    case: Structure,
    bv: &BenefitVector,
    seed: u64,
    filtered: bool,
    study: &Study,
) -> String {
    let s = &study.summary;
    let mut out = String::new();
    let mut line = |k: &str, v: String| writeln!(out, "{k:<28}{v}").unwrap();
    line("case", case.to_string());
    line("benefit vector", bv.to_string());
    line("seed", seed.to_string());
    line("samples", s.n.to_string());
    if filtered {
        line("attempts", study.attempts.to_string());
        line("acceptance rate", fmt5(study.acceptance_rate()));
    }
    line("avg increased lower bound", fmt5(s.avg_lower_gain));
    line("avg decreased upper bound", fmt5(s.avg_upper_gain));
    line("avg gap (Li-Pearl)", fmt5(s.avg_gap_baseline));
    line("avg gap (with covariate)", fmt5(s.avg_gap_theorem));
    line("decision flips", s.flips.to_string());
    line("narrowed samples", s.narrower.to_string());
    writeln!(out, "\n{MACHINE_HEADER}").unwrap();
    for (k, v) in [
        ("case", case.to_string()),
        ("seed", seed.to_string()),
        ("filtered", filtered.to_string()),
        ("n", s.n.to_string()),
        ("attempts", study.attempts.to_string()),
        ("avg_lower_gain", format!("{:?}", s.avg_lower_gain)),
        ("avg_upper_gain", format!("{:?}", s.avg_upper_gain)),
        ("avg_gap_baseline", format!("{:?}", s.avg_gap_baseline)),
        ("avg_gap_theorem", format!("{:?}", s.avg_gap_theorem)),
        ("flips", s.flips.to_string()),
        ("narrower", s.narrower.to_string()),
        (
            "dominance_violations",
            study.dominance_violations.to_string(),
        ),
    ] {
        writeln!(out, "{k}={v}").unwrap();
    }
    out
}

pub fn render_containment(seed: u64, r: &ContainmentReport) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| writeln!(out, "{k:<28}{v}").unwrap();
    line("structure", r.structure.to_string());
    line("trials", r.trials.to_string());
    line("seed", seed.to_string());
    line("PNS violations", r.pns_violations.to_string());
    line("benefit violations", r.benefit_violations.to_string());
    line("dominance violations", r.dominance_violations.to_string());
    line("invalid induced inputs", r.invalid_inputs.to_string());
    line("bound errors", r.bound_errors.to_string());
    line(
        "max decomposition error",
        format!("{:.3e}", r.max_decomposition_error),
    );
    line(
        "max effect identity error",
        format!("{:.3e}", r.max_effect_identity_error),
    );
    line(
        "max type-sum error",
        format!("{:.3e}", r.max_type_sum_error),
    );
    writeln!(out, "\n{MACHINE_HEADER}").unwrap();
    for (k, v) in [
        ("structure", r.structure.to_string()),
        ("trials", r.trials.to_string()),
        ("seed", seed.to_string()),
        ("pns_violations", r.pns_violations.to_string()),
        ("benefit_violations", r.benefit_violations.to_string()),
        ("dominance_violations", r.dominance_violations.to_string()),
        ("invalid_inputs", r.invalid_inputs.to_string()),
        ("bound_errors", r.bound_errors.to_string()),
        (
            "max_decomposition_error",
            format!("{:?}", r.max_decomposition_error),
        ),
        (
            "max_effect_identity_error",
            format!("{:?}", r.max_effect_identity_error),
        ),
        ("max_type_sum_error", format!("{:?}", r.max_type_sum_error)),
    ] {
        writeln!(out, "{k}={v}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use unitbound::benefit::lipearl_bounds;
    use unitbound::{BaselineInput, ObsTable};

    fn sample() -> BenefitBounds {
        let input = BaselineInput {
            p_y_do_x: 0.6,
            p_y_do_xp: 0.3,
            obs: ObsTable {
                p_xy: 0.3,
                p_xyp: 0.2,
                p_xpy: 0.15,
                p_xpyp: 0.35,
            },
        };
        lipearl_bounds(&input, &BenefitVector::new(1.0, -1.0, -1.0, -1.0).unwrap()).unwrap()
    }

    #[test]
    fn machine_section_round_trips_bitwise() {
        let b = sample();
        let report = BoundsReport {
            structure: Structure::Baseline,
            bv: BenefitVector::cure_minus_harm(),
            backdoor: false,
            z_labels: &[],
            bounds: &b,
            baseline: None,
        };
        let (lo, hi) = machine_interval(&report.render()).unwrap();
        assert_eq!(lo.to_bits(), b.interval.lower().to_bits());
        assert_eq!(hi.to_bits(), b.interval.upper().to_bits());
    }

    #[test]
    fn missing_section() {
        assert_eq!(
            parse_machine("lower=1\n"),
            Err(MachineError::MissingSection)
        );
    }

    #[test]
    fn bad_line() {
        assert!(matches!(
            parse_machine("[result]\nlower 1\n"),
            Err(MachineError::BadLine(_))
        ));
    }
}
