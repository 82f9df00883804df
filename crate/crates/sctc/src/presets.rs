//! Preset ensembles behind the threshold tables and the named CLI presets.
//!
//! The rate ladder fixes the parity permeability `rho2` per target rate. PCC
//! and BCC rows use the exact rational value `(1/R - 1) / 2` so the design
//! rate is exactly nominal; SCC rows keep the systematic stream intact
//! (`rho0 = 1`), use the table's optimized `rho2`, and absorb the remainder
//! into the outer parity via `rho1 = 1/R - 1 - 2 rho2`.

use crate::ensembles::{EnsembleSpec, Family};

pub const GEN_4_STATE: &str = "1,5/7";
pub const GEN_8_STATE: &str = "1,11/13";
pub const GEN_BCC: &str = "1 0 1/7; 0 1 5/7";
/// Default chain length for coupled thresholds.
pub const DEFAULT_CHAIN_LENGTH: usize = 100;

/// Which published table a preset row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PaperTable {
    One,
    Two,
    Three,
}

impl PaperTable {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" | "1" | "i" => Some(PaperTable::One),
            "table2" | "2" | "ii" => Some(PaperTable::Two),
            "table3" | "3" | "iii" => Some(PaperTable::Three),
            _ => None,
        }
    }
}

/// One row of a threshold table: the uncoupled base ensemble, its metadata,
/// and the published reference values.
#[derive(Clone, Debug)]
pub struct TableRow {
    pub table: PaperTable,
    pub ensemble: &'static str,
    pub states: usize,
    pub rate_label: &'static str,
    pub rate: f64,
    pub rho2_label: &'static str,
    pub base: EnsembleSpec,
    pub paper_bp: Option<f64>,
    pub paper_map: Option<f64>,
    /// Published coupled thresholds as `(m, value)` pairs.
    pub paper_sc: Vec<(usize, f64)>,
    /// Smallest coupling memory with observed threshold saturation.
    pub m_min: Option<usize>,
    /// Published gap to the Shannon limit.
    pub delta_sh: Option<f64>,
}

impl TableRow {
    /// Spec of the coupled ensemble at memory `m` and chain length `l`.
    pub fn coupled(&self, m: usize, chain_length: usize) -> EnsembleSpec {
        self.base.clone().with_coupling(m, chain_length)
    }

    /// Human-readable key used by row filters, e.g. `PCC 4 1/2`.
    pub fn key(&self) -> String {
        format!("{} {} {}", self.ensemble, self.states, self.rate_label)
    }
}

fn pcc(states: usize, rho2: f64) -> EnsembleSpec {
    let g = if states == 8 { GEN_8_STATE } else { GEN_4_STATE };
    EnsembleSpec::new(Family::Pcc, g, g).with_puncturing(1.0, 1.0, rho2)
}

fn scc(states: usize, rho1: f64, rho2: f64) -> EnsembleSpec {
    let g = if states == 8 { GEN_8_STATE } else { GEN_4_STATE };
    EnsembleSpec::new(Family::Scc, g, g).with_puncturing(1.0, rho1, rho2)
}

fn bcc(family: Family, rho2: f64) -> EnsembleSpec {
    EnsembleSpec::new(family, GEN_BCC, GEN_BCC).with_puncturing(1.0, 1.0, rho2)
}

/// Outer-parity permeability that makes an SCC hit the nominal rate exactly.
fn scc_rho1(rate: f64, rho2: f64) -> f64 {
    1.0 / rate - 1.0 - 2.0 * rho2
}

/// Thresholds for rate-1/2 ensembles, coupled with memory 1.
pub fn table1() -> Vec<TableRow> {
    let mk = |ensemble: &'static str,
              states: usize,
              base: EnsembleSpec,
              bp: f64,
              map: f64,
              sc1: f64| TableRow {
        table: PaperTable::One,
        ensemble,
        states,
        rate_label: "1/2",
        rate: 0.5,
        rho2_label: "0.5",
        base,
        paper_bp: Some(bp),
        paper_map: Some(map),
        paper_sc: vec![(1, sc1)],
        m_min: None,
        delta_sh: None,
    };
    vec![
        mk("PCC", 4, pcc(4, 0.5), 0.4606, 0.4689, 0.4689),
        mk("SCC", 4, scc(4, 0.0, 0.5), 0.3594, 0.4981, 0.4708),
        mk("PCC", 8, pcc(8, 0.5), 0.4651, 0.4863, 0.4862),
        mk("SCC", 8, scc(8, 0.0, 0.5), 0.3120, 0.4993, 0.4507),
        mk("BCC-I", 4, bcc(Family::Bcc1, 0.5), 0.3013, 0.4993, 0.4932),
        mk("BCC-II", 4, bcc(Family::Bcc2, 0.5), 0.3013, 0.4993, 0.4988),
    ]
}

struct RateStep {
    label: &'static str,
    rate: f64,
    rho2_label: &'static str,
    /// Exact parity permeability for PCC/BCC rows.
    rho2_exact: f64,
    /// Optimized table value for SCC rows.
    rho2_scc: f64,
}

const RATE_LADDER: [RateStep; 6] = [
    RateStep {
        label: "1/3",
        rate: 1.0 / 3.0,
        rho2_label: "1.0",
        rho2_exact: 1.0,
        rho2_scc: 1.0,
    },
    RateStep {
        label: "1/2",
        rate: 0.5,
        rho2_label: "0.5",
        rho2_exact: 0.5,
        rho2_scc: 0.5,
    },
    RateStep {
        label: "2/3",
        rate: 2.0 / 3.0,
        rho2_label: "0.25",
        rho2_exact: 0.25,
        rho2_scc: 0.25,
    },
    RateStep {
        label: "3/4",
        rate: 0.75,
        rho2_label: "0.166",
        rho2_exact: 1.0 / 6.0,
        rho2_scc: 0.166,
    },
    RateStep {
        label: "4/5",
        rate: 0.8,
        rho2_label: "0.125",
        rho2_exact: 0.125,
        rho2_scc: 0.125,
    },
    RateStep {
        label: "9/10",
        rate: 0.9,
        rho2_label: "0.055",
        rho2_exact: 1.0 / 18.0,
        rho2_scc: 0.055,
    },
];

/// Thresholds for punctured PCC/SCC ensembles across the rate ladder,
/// coupled with memories 1, 3 and 5.
pub fn table2() -> Vec<TableRow> {
    struct Row {
        ensemble: &'static str,
        rate: &'static str,
        states: usize,
        bp: f64,
        map: f64,
        sc: [f64; 3],
        m_min: usize,
        delta_sh: f64,
    }
    let rows = [
        Row { ensemble: "PCC", rate: "1/3", states: 4, bp: 0.6428, map: 0.6553, sc: [0.6553, 0.6553, 0.6553], m_min: 1, delta_sh: 0.0113 },
        Row { ensemble: "SCC", rate: "1/3", states: 4, bp: 0.5405, map: 0.6654, sc: [0.6437, 0.6650, 0.6654], m_min: 4, delta_sh: 0.0012 },
        Row { ensemble: "PCC", rate: "1/3", states: 8, bp: 0.6368, map: 0.6621, sc: [0.6617, 0.6621, 0.6621], m_min: 2, delta_sh: 0.0045 },
        Row { ensemble: "SCC", rate: "1/3", states: 8, bp: 0.5026, map: 0.6663, sc: [0.6313, 0.6647, 0.6662], m_min: 6, delta_sh: 0.0003 },
        Row { ensemble: "PCC", rate: "1/2", states: 4, bp: 0.4606, map: 0.4689, sc: [0.4689, 0.4689, 0.4689], m_min: 1, delta_sh: 0.0311 },
        Row { ensemble: "SCC", rate: "1/2", states: 4, bp: 0.3594, map: 0.4981, sc: [0.4708, 0.4975, 0.4981], m_min: 5, delta_sh: 0.0019 },
        Row { ensemble: "PCC", rate: "1/2", states: 8, bp: 0.4651, map: 0.4863, sc: [0.4862, 0.4863, 0.4863], m_min: 2, delta_sh: 0.0137 },
        Row { ensemble: "SCC", rate: "1/2", states: 8, bp: 0.3120, map: 0.4993, sc: [0.4507, 0.4970, 0.4992], m_min: 7, delta_sh: 0.0007 },
        Row { ensemble: "PCC", rate: "2/3", states: 4, bp: 0.2732, map: 0.2772, sc: [0.2772, 0.2772, 0.2772], m_min: 1, delta_sh: 0.0561 },
        Row { ensemble: "SCC", rate: "2/3", states: 4, bp: 0.2038, map: 0.3316, sc: [0.3303, 0.3305, 0.3315], m_min: 6, delta_sh: 0.0018 },
        Row { ensemble: "PCC", rate: "2/3", states: 8, bp: 0.2945, map: 0.3080, sc: [0.3080, 0.3080, 0.3080], m_min: 1, delta_sh: 0.0253 },
        Row { ensemble: "SCC", rate: "2/3", states: 8, bp: 0.1507, map: 0.3326, sc: [0.2710, 0.3278, 0.3323], m_min: 7, delta_sh: 0.0007 },
        Row { ensemble: "PCC", rate: "3/4", states: 4, bp: 0.1854, map: 0.1876, sc: [0.1876, 0.1876, 0.1876], m_min: 1, delta_sh: 0.0624 },
        Row { ensemble: "SCC", rate: "3/4", states: 4, bp: 0.1337, map: 0.2486, sc: [0.2155, 0.2471, 0.2486], m_min: 5, delta_sh: 0.0014 },
        Row { ensemble: "PCC", rate: "3/4", states: 8, bp: 0.2103, map: 0.2196, sc: [0.2196, 0.2196, 0.2196], m_min: 1, delta_sh: 0.0304 },
        Row { ensemble: "SCC", rate: "3/4", states: 8, bp: 0.0865, map: 0.2495, sc: [0.1827, 0.2416, 0.2488], m_min: 8, delta_sh: 0.0005 },
        Row { ensemble: "PCC", rate: "4/5", states: 4, bp: 0.1376, map: 0.1391, sc: [0.1391, 0.1391, 0.1391], m_min: 1, delta_sh: 0.0609 },
        Row { ensemble: "SCC", rate: "4/5", states: 4, bp: 0.0942, map: 0.1990, sc: [0.1644, 0.1968, 0.1989], m_min: 7, delta_sh: 0.0011 },
        Row { ensemble: "PCC", rate: "4/5", states: 8, bp: 0.1628, map: 0.1698, sc: [0.1698, 0.1698, 0.1698], m_min: 1, delta_sh: 0.0302 },
        Row { ensemble: "SCC", rate: "4/5", states: 8, bp: 0.0517, map: 0.1996, sc: [0.1302, 0.1885, 0.1982], m_min: 8, delta_sh: 0.0004 },
        Row { ensemble: "PCC", rate: "9/10", states: 4, bp: 0.0578, map: 0.0582, sc: [0.0582, 0.0582, 0.0582], m_min: 1, delta_sh: 0.0418 },
        Row { ensemble: "SCC", rate: "9/10", states: 4, bp: 0.0269, map: 0.0996, sc: [0.0624, 0.0930, 0.0988], m_min: 8, delta_sh: 0.0012 },
        Row { ensemble: "PCC", rate: "9/10", states: 8, bp: 0.0732, map: 0.0761, sc: [0.0761, 0.0761, 0.0761], m_min: 1, delta_sh: 0.0239 },
        Row { ensemble: "SCC", rate: "9/10", states: 8, bp: 0.0128, map: 0.0999, sc: [0.0384, 0.0765, 0.0931], m_min: 16, delta_sh: 0.0001 },
    ];
    rows.iter()
        .map(|r| {
            let step = RATE_LADDER.iter().find(|s| s.label == r.rate).unwrap();
            let base = if r.ensemble == "PCC" {
                pcc(r.states, step.rho2_exact)
            } else {
                scc(r.states, scc_rho1(step.rate, step.rho2_scc), step.rho2_scc)
            };
            TableRow {
                table: PaperTable::Two,
                ensemble: r.ensemble,
                states: r.states,
                rate_label: step.label,
                rate: step.rate,
                rho2_label: step.rho2_label,
                base,
                paper_bp: Some(r.bp),
                paper_map: Some(r.map),
                paper_sc: vec![(1, r.sc[0]), (3, r.sc[1]), (5, r.sc[2])],
                m_min: Some(r.m_min),
                delta_sh: Some(r.delta_sh),
            }
        })
        .collect()
}

/// Thresholds for punctured braided ensembles across the rate ladder.
pub fn table3() -> Vec<TableRow> {
    struct Row {
        family: Family,
        ensemble: &'static str,
        rate: &'static str,
        bp: Option<f64>,
        map: f64,
        sc: [f64; 3],
        delta_sh: f64,
    }
    let rows = [
        Row { family: Family::Bcc1, ensemble: "BCC-I", rate: "1/3", bp: Some(0.5541), map: 0.6653, sc: [0.6609, 0.6644, 0.6650], delta_sh: 0.0013 },
        Row { family: Family::Bcc2, ensemble: "BCC-II", rate: "1/3", bp: Some(0.5541), map: 0.6653, sc: [0.6651, 0.6653, 0.6653], delta_sh: 0.0013 },
        Row { family: Family::Bcc1, ensemble: "BCC-I", rate: "1/2", bp: Some(0.3013), map: 0.4993, sc: [0.4932, 0.4980, 0.4988], delta_sh: 0.0007 },
        Row { family: Family::Bcc2, ensemble: "BCC-II", rate: "1/2", bp: Some(0.3013), map: 0.4993, sc: [0.4988, 0.4993, 0.4993], delta_sh: 0.0007 },
        Row { family: Family::Bcc1, ensemble: "BCC-I", rate: "2/3", bp: None, map: 0.3331, sc: [0.3257, 0.3315, 0.3325], delta_sh: 0.0002 },
        Row { family: Family::Bcc2, ensemble: "BCC-II", rate: "2/3", bp: None, map: 0.3331, sc: [0.3323, 0.3331, 0.3331], delta_sh: 0.0002 },
        Row { family: Family::Bcc1, ensemble: "BCC-I", rate: "3/4", bp: None, map: 0.2491, sc: [0.2411, 0.2473, 0.2484], delta_sh: 0.0009 },
        Row { family: Family::Bcc2, ensemble: "BCC-II", rate: "3/4", bp: None, map: 0.2491, sc: [0.2481, 0.2491, 0.2491], delta_sh: 0.0009 },
        Row { family: Family::Bcc1, ensemble: "BCC-I", rate: "4/5", bp: None, map: 0.1999, sc: [0.1915, 0.1979, 0.1991], delta_sh: 0.0001 },
        Row { family: Family::Bcc2, ensemble: "BCC-II", rate: "4/5", bp: None, map: 0.1999, sc: [0.1986, 0.1999, 0.1999], delta_sh: 0.0001 },
        Row { family: Family::Bcc1, ensemble: "BCC-I", rate: "9/10", bp: None, map: 0.0990, sc: [0.0893, 0.0966, 0.0980], delta_sh: 0.0010 },
        Row { family: Family::Bcc2, ensemble: "BCC-II", rate: "9/10", bp: None, map: 0.0990, sc: [0.0954, 0.0990, 0.0990], delta_sh: 0.0010 },
    ];
    rows.iter()
        .map(|r| {
            let step = RATE_LADDER.iter().find(|s| s.label == r.rate).unwrap();
            TableRow {
                table: PaperTable::Three,
                ensemble: r.ensemble,
                states: 4,
                rate_label: step.label,
                rate: step.rate,
                rho2_label: step.rho2_label,
                base: bcc(r.family, step.rho2_exact),
                paper_bp: r.bp,
                paper_map: Some(r.map),
                paper_sc: vec![(1, r.sc[0]), (3, r.sc[1]), (5, r.sc[2])],
                m_min: None,
                delta_sh: Some(r.delta_sh),
            }
        })
        .collect()
}

pub fn table(t: PaperTable) -> Vec<TableRow> {
    match t {
        PaperTable::One => table1(),
        PaperTable::Two => table2(),
        PaperTable::Three => table3(),
    }
}

/// Named base ensembles for the CLI; all unpunctured and uncoupled.
pub fn named_preset(name: &str) -> Option<EnsembleSpec> {
    let spec = match name.to_ascii_lowercase().as_str() {
        "pcc4" => EnsembleSpec::new(Family::Pcc, GEN_4_STATE, GEN_4_STATE),
        "pcc8" => EnsembleSpec::new(Family::Pcc, GEN_8_STATE, GEN_8_STATE),
        "scc4" => EnsembleSpec::new(Family::Scc, GEN_4_STATE, GEN_4_STATE),
        "scc8" => EnsembleSpec::new(Family::Scc, GEN_8_STATE, GEN_8_STATE),
        "bcc1" => EnsembleSpec::new(Family::Bcc1, GEN_BCC, GEN_BCC),
        "bcc2" => EnsembleSpec::new(Family::Bcc2, GEN_BCC, GEN_BCC),
        _ => return None,
    };
    Some(spec)
}

pub const PRESET_NAMES: [&str; 6] = ["pcc4", "pcc8", "scc4", "scc8", "bcc1", "bcc2"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_preset_rows_validate() {
        for row in table1().into_iter().chain(table2()).chain(table3()) {
            crate::ensembles::EnsembleDe::new(&row.base)
                .unwrap_or_else(|e| panic!("{}: {e}", row.key()));
            crate::ensembles::EnsembleDe::new(&row.coupled(1, 10)).unwrap();
        }
    }

    #[test]
    fn preset_rates_match_labels() {
        for row in table1().into_iter().chain(table2()).chain(table3()) {
            assert!(
                (row.base.rate() - row.rate).abs() < 5e-4,
                "{}: rate {} vs label {}",
                row.key(),
                row.base.rate(),
                row.rate
            );
        }
    }

    #[test]
    fn named_presets_resolve() {
        for name in PRESET_NAMES {
            assert!(named_preset(name).is_some());
        }
        assert!(named_preset("nope").is_none());
    }
}
