//! Population scaling, expected net benefit of sampling and the curve of
//! optimal sample size.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psa::format_decimal;
use crate::voi::VoiEstimate;

/// Population that benefits from the decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    /// Persons per year.
    pub incidence: f64,
    /// Years, at least 1.
    pub horizon: u32,
    /// Annual discount rate, e.g. `0.035`.
    pub discount: f64,
}

impl PopulationSpec {
    pub fn new(incidence: f64, horizon: u32, discount: f64) -> Result<Self> {
        if !(incidence >= 0.0 && incidence.is_finite()) {
            return Err(Error::Argument(format!("incidence must be ≥ 0, got {incidence}")));
        }
        if horizon < 1 {
            return Err(Error::Argument("horizon must be at least 1 year".into()));
        }
        if !(discount >= 0.0 && discount.is_finite()) {
            return Err(Error::Argument(format!("discount rate must be ≥ 0, got {discount}")));
        }
        Ok(Self {
            incidence,
            horizon,
            discount,
        })
    }

    /// Discounted number of beneficiaries, `Σ_{y=1..H} I / (1 + r)^(y−1)`.
    /// The first year is undiscounted.
    pub fn discounted_population(&self) -> f64 {
        let mut total = 0.0;
        for y in 0..self.horizon {
            total += self.incidence / (1.0 + self.discount).powi(y as i32);
        }
        total
    }
}

/// Per-person value scaled to the discounted population.
pub fn population_scale(evsi_per_person: f64, pop: &PopulationSpec) -> Result<f64> {
    if !(evsi_per_person >= 0.0 && evsi_per_person.is_finite()) {
        return Err(Error::Argument(format!(
            "per-person value must be finite and ≥ 0, got {evsi_per_person}"
        )));
    }
    Ok(evsi_per_person * pop.discounted_population())
}

/// Cost of running a study of `N` participants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub fixed: f64,
    pub per_participant: f64,
}

impl CostModel {
    pub fn new(fixed: f64, per_participant: f64) -> Result<Self> {
        for (name, v) in [("fixed", fixed), ("per-participant", per_participant)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} research cost must be ≥ 0, got {v}")));
            }
        }
        Ok(Self { fixed, per_participant })
    }

    pub fn cost(&self, n: u64) -> f64 {
        self.fixed + self.per_participant * n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnbsPoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub evsi_pp: f64,
    pub evsi_pop: f64,
    pub cost: f64,
    pub enbs: f64,
}

/// ENBS over the evaluated sample sizes; no interpolation between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnbsCurve {
    /// Sorted by `N`.
    pub points: Vec<EnbsPoint>,
    /// Maximiser of ENBS, ties to the smallest `N`.
    #[serde(rename = "optimal_N")]
    pub optimal_n: u64,
    pub max_enbs: f64,
    /// Set when no evaluated study has positive expected net benefit.
    pub research_not_worthwhile: bool,
}

/// Builds the curve from `(N, per-person EVSI)` pairs.
pub fn enbs_curve(evsi_by_n: &[(u64, f64)], pop: &PopulationSpec, cost: &CostModel) -> Result<EnbsCurve> {
    if evsi_by_n.is_empty() {
        return Err(Error::Argument("no sample sizes supplied".into()));
    }
    let mut sorted = evsi_by_n.to_vec();
    sorted.sort_by_key(|&(n, _)| n);
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Argument(format!("sample size {} appears twice", w[0].0)));
        }
    }
    if sorted[0].0 == 0 {
        return Err(Error::Argument("sample sizes must be positive".into()));
    }
    let mut points = Vec::with_capacity(sorted.len());
    for (n, evsi_pp) in sorted {
        let evsi_pop = population_scale(evsi_pp, pop)?;
        let c = cost.cost(n);
        points.push(EnbsPoint {
            n,
            evsi_pp,
            evsi_pop,
            cost: c,
            enbs: evsi_pop - c,
        });
    }
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.enbs > points[best].enbs {
            best = i;
        }
    }
    let max_enbs = points[best].enbs;
    Ok(EnbsCurve {
        optimal_n: points[best].n,
        max_enbs,
        research_not_worthwhile: max_enbs < 0.0,
        points,
    })
}

/// [`enbs_curve`] from EVSI estimates carrying their design `N`.
pub fn enbs_curve_from_estimates(estimates: &[VoiEstimate], pop: &PopulationSpec, cost: &CostModel) -> Result<EnbsCurve> {
    let pairs = estimates
        .iter()
        .map(|e| {
            e.design_n
                .map(|n| (n, e.value))
                .ok_or_else(|| Error::Argument("estimate has no design sample size".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    enbs_curve(&pairs, pop, cost)
}

/// Long-format CSV `N,evsi_pp,evsi_pop,cost,enbs`.
pub fn write_enbs_csv<W: Write>(curve: &EnbsCurve, mut writer: W) -> Result<()> {
    writeln!(writer, "N,evsi_pp,evsi_pop,cost,enbs")?;
    for p in &curve.points {
        writeln!(
            writer,
            "{},{},{},{},{}",
            p.n,
            format_decimal(p.evsi_pp),
            format_decimal(p.evsi_pop),
            format_decimal(p.cost),
            format_decimal(p.enbs)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop(h: u32, r: f64) -> PopulationSpec {
        PopulationSpec::new(1000.0, h, r).unwrap()
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(population_scale(10.0, &pop(1, 0.0)).unwrap(), 10_000.0);
        assert_eq!(population_scale(10.0, &pop(2, 0.0)).unwrap(), 20_000.0);
        let v = population_scale(10.0, &pop(2, 0.035)).unwrap();
        assert_eq!(format!("{v:.2}"), "19661.84");
        assert!(population_scale(-1.0, &pop(1, 0.0)).is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(PopulationSpec::new(1000.0, 0, 0.0).is_err());
        assert!(PopulationSpec::new(-1.0, 1, 0.0).is_err());
        assert!(CostModel::new(-5.0, 0.0).is_err());
    }

    #[test]
    fn worthless_study_is_flagged() {
        let c = CostModel::new(1000.0, 10.0).unwrap();
        let curve = enbs_curve(&[(10, 0.0), (20, 0.0)], &pop(1, 0.0), &c).unwrap();
        assert!(curve.research_not_worthwhile);
        assert_eq!(curve.points[0].enbs, -1100.0);
        assert_eq!(curve.optimal_n, 10);

        let single = enbs_curve(&[(50, 0.0)], &pop(1, 0.0), &c).unwrap();
        assert_eq!(single.optimal_n, 50);
        assert!(single.max_enbs < 0.0 && single.research_not_worthwhile);
    }

    #[test]
    fn ties_break_to_smallest_and_input_is_sorted() {
        let unit = PopulationSpec::new(1.0, 1, 0.0).unwrap();
        let c = CostModel::new(0.0, 0.0).unwrap();
        let curve = enbs_curve(&[(30, 5.0), (10, 5.0), (20, 1.0)], &unit, &c).unwrap();
        assert_eq!(curve.points.iter().map(|p| p.n).collect::<Vec<_>>(), vec![10, 20, 30]);
        assert_eq!(curve.optimal_n, 10);
    }

    #[test]
    fn rejects_bad_lists() {
        let c = CostModel::new(0.0, 0.0).unwrap();
        assert!(enbs_curve(&[], &pop(1, 0.0), &c).is_err());
        assert!(enbs_curve(&[(5, 1.0), (5, 2.0)], &pop(1, 0.0), &c).is_err());
        assert!(enbs_curve(&[(0, 1.0)], &pop(1, 0.0), &c).is_err());
    }

    #[test]
    fn csv_and_json_shape() {
        let c = CostModel::new(0.0, 1.0).unwrap();
        let curve = enbs_curve(&[(10, 2.0)], &pop(1, 0.0), &c).unwrap();
        let mut buf = Vec::new();
        write_enbs_csv(&curve, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("N,evsi_pp,evsi_pop,cost,enbs\n10,"));
        let v = serde_json::to_value(&curve).unwrap();
        assert_eq!(v["optimal_N"], 10);
        assert_eq!(v["research_not_worthwhile"], false);
    }
}
