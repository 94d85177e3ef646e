//! Concrete car-to-car rear scenarios in the style of the NCAP AEB protocol.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::State;
use crate::error::{Error, Result};
use crate::models::SubjectVehicleModel;
use crate::sim::{run_scenario, LeadPolicy, SimConfig};

const BUILTIN: &str = include_str!("../../data/ncap_battery.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NcapKind {
    /// Stationary lead.
    #[serde(rename = "CCRs")]
    Ccrs,
    /// Lead at constant speed.
    #[serde(rename = "CCRm")]
    Ccrm,
    /// Lead braking to a stop.
    #[serde(rename = "CCRb")]
    Ccrb,
}

impl fmt::Display for NcapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NcapKind::Ccrs => "CCRs",
            NcapKind::Ccrm => "CCRm",
            NcapKind::Ccrb => "CCRb",
        })
    }
}

impl FromStr for NcapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CCRs" => Ok(NcapKind::Ccrs),
            "CCRm" => Ok(NcapKind::Ccrm),
            "CCRb" => Ok(NcapKind::Ccrb),
            other => Err(Error::Config(format!("unknown scenario kind `{other}`"))),
        }
    }
}

/// One battery row. Speeds in m/s, headway in m, `lead_decel` in m/s²
/// (positive magnitude, CCRb only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NcapScenario {
    pub id: String,
    pub kind: NcapKind,
    pub v0: f64,
    pub v1: f64,
    pub headway: f64,
    pub lead_decel: Option<f64>,
}

impl NcapScenario {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("scenario {}: {msg}", self.id)));
        if ![self.v0, self.v1, self.headway]
            .iter()
            .all(|x| x.is_finite() && *x >= 0.0)
        {
            return bad("speeds and headway must be finite and non-negative");
        }
        if self.headway <= 0.0 {
            return bad("headway must be positive");
        }
        match (self.kind, self.lead_decel) {
            (NcapKind::Ccrs, None) if self.v1 == 0.0 => Ok(()),
            (NcapKind::Ccrs, _) => bad("CCRs needs a stationary lead and no lead_decel"),
            (NcapKind::Ccrm, None) => Ok(()),
            (NcapKind::Ccrm, Some(_)) => bad("CCRm takes no lead_decel"),
            (NcapKind::Ccrb, Some(a)) if a.is_finite() && a > 0.0 => Ok(()),
            (NcapKind::Ccrb, _) => bad("CCRb needs a positive lead_decel"),
        }
    }

    pub fn initial_state(&self) -> State {
        State::new(self.headway, self.v0, self.v1)
    }

    pub fn policy(&self) -> LeadPolicy {
        match (self.kind, self.lead_decel) {
            (NcapKind::Ccrs, _) => LeadPolicy::Stationary,
            (NcapKind::Ccrb, Some(a)) => LeadPolicy::braking(-a),
            _ => LeadPolicy::ConstantSpeed,
        }
    }
}

pub fn parse_battery<R: Read>(input: R) -> Result<Vec<NcapScenario>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let sc: NcapScenario = row?;
        sc.check()?;
        out.push(sc);
    }
    if out.is_empty() {
        return Err(Error::Config("scenario battery is empty".into()));
    }
    Ok(out)
}

/// The shipped 48-scenario battery.
pub fn builtin_battery() -> Vec<NcapScenario> {
    parse_battery(BUILTIN.as_bytes()).expect("bundled battery parses")
}

pub fn load_battery(path: &Path) -> Result<Vec<NcapScenario>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_battery(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcapOutcome {
    /// Index into the scenario list.
    pub scenario: usize,
    pub repeat: usize,
    pub passed: bool,
    pub min_headway: f64,
    /// Seconds until contact, for failed runs.
    pub collision_time: Option<f64>,
}

/// Runs every scenario `repeats` times, in scenario-major order. The model's
/// random stream, if any, carries over between runs; the simulator's comes
/// from `seed`.
pub fn ncap_battery(
    model: &mut dyn SubjectVehicleModel,
    scenarios: &[NcapScenario],
    repeats: usize,
    sim: &SimConfig,
    seed: u64,
) -> Result<Vec<NcapOutcome>> {
    sim.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(scenarios.len() * repeats);
    for (i, sc) in scenarios.iter().enumerate() {
        sc.check()?;
        let s0 = sc.initial_state();
        if !sim.bounds.contains(&s0) {
            return Err(Error::Config(format!(
                "scenario {} starts outside the simulation bounds",
                sc.id
            )));
        }
        let policy = sc.policy();
        for repeat in 0..repeats {
            let traj = run_scenario(model, &policy, s0, sim, &mut rng)?;
            let min_headway = traj
                .states
                .iter()
                .map(|s| s.d)
                .fold(f64::INFINITY, f64::min);
            out.push(NcapOutcome {
                scenario: i,
                repeat,
                passed: !traj.collided(),
                min_headway,
                collision_time: traj.collided().then(|| (traj.len() - 1) as f64 * sim.dt),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassCounts {
    pub ccrs: usize,
    pub ccrm: usize,
    pub ccrb: usize,
    pub runs: usize,
}

impl PassCounts {
    pub fn total(&self) -> usize {
        self.ccrs + self.ccrm + self.ccrb
    }
}

pub fn pass_counts(scenarios: &[NcapScenario], outcomes: &[NcapOutcome]) -> PassCounts {
    let mut c = PassCounts::default();
    for o in outcomes {
        c.runs += 1;
        if o.passed {
            match scenarios[o.scenario].kind {
                NcapKind::Ccrs => c.ccrs += 1,
                NcapKind::Ccrm => c.ccrm += 1,
                NcapKind::Ccrb => c.ccrb += 1,
            }
        }
    }
    c
}

pub fn write_battery_results<W: Write>(
    scenarios: &[NcapScenario],
    outcomes: &[NcapOutcome],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario",
        "kind",
        "v0",
        "v1",
        "headway",
        "lead_decel",
        "repeat",
        "outcome",
        "min_headway",
        "collision_time",
    ])?;
    for o in outcomes {
        let sc = &scenarios[o.scenario];
        w.write_record([
            sc.id.clone(),
            sc.kind.to_string(),
            sc.v0.to_string(),
            sc.v1.to_string(),
            sc.headway.to_string(),
            sc.lead_decel.map(|a| a.to_string()).unwrap_or_default(),
            o.repeat.to_string(),
            if o.passed { "pass" } else { "collision" }.to_owned(),
            o.min_headway.to_string(),
            o.collision_time.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<battery results>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Idm, IdmParams, PerfectBrake};

    #[test]
    fn builtin_battery_shape() {
        let b = builtin_battery();
        assert_eq!(b.len(), 48);
        let count = |k| b.iter().filter(|s| s.kind == k).count();
        assert_eq!(count(NcapKind::Ccrs), 16);
        assert_eq!(count(NcapKind::Ccrm), 16);
        assert_eq!(count(NcapKind::Ccrb), 16);
        for s in &b {
            match s.kind {
                NcapKind::Ccrs => assert_eq!(s.v1, 0.0),
                NcapKind::Ccrm => assert_eq!(s.v1, 5.56),
                NcapKind::Ccrb => assert_eq!(s.v0, s.v1),
            }
        }
    }

    #[test]
    fn rejects_inconsistent_rows() {
        let text = "id,kind,v0,v1,headway,lead_decel\nx,CCRs,10,5,40,\n";
        assert!(parse_battery(text.as_bytes()).is_err());
        let text = "id,kind,v0,v1,headway,lead_decel\nx,CCRb,10,10,40,\n";
        assert!(parse_battery(text.as_bytes()).is_err());
        let text = "id,kind,v0,v1,headway,lead_decel\nx,CCRx,10,10,40,\n";
        assert!(parse_battery(text.as_bytes()).is_err());
        let text = "id,kind,v0,v1,headway,lead_decel\n";
        assert!(parse_battery(text.as_bytes()).is_err());
    }

    #[test]
    fn perfect_brake_clears_short_stop() {
        let sc = NcapScenario {
            id: "s".into(),
            kind: NcapKind::Ccrs,
            v0: 10.0,
            v1: 0.0,
            headway: 40.0,
            lead_decel: None,
        };
        let out = ncap_battery(
            &mut PerfectBrake::new(10.0),
            &[sc],
            1,
            &SimConfig::car_following_default(),
            0,
        )
        .unwrap();
        assert!(out[0].passed);
        // 10^2 / 20 = 5 m of stopping distance
        assert!(
            (out[0].min_headway - 35.0).abs() < 0.6,
            "{}",
            out[0].min_headway
        );
    }

    #[test]
    fn deterministic_repeats_agree() {
        let b = builtin_battery();
        let out = ncap_battery(
            &mut Idm::new(IdmParams::normal()),
            &b,
            2,
            &SimConfig::car_following_default(),
            1,
        )
        .unwrap();
        for pair in out.chunks(2) {
            assert_eq!(pair[0].passed, pair[1].passed);
            assert_eq!(pair[0].min_headway.to_bits(), pair[1].min_headway.to_bits());
        }
    }
}
