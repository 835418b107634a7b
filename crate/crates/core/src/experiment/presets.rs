//! The preset catalog: one config with expectations per reproduced claim.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::check::{Check, Stream};
use super::{CellConfig, ExperimentConfig, Factor, OutputPaths, Real, ScheduleConfig, SpacingConfig, Task, SCHEMA_VERSION};
use crate::budget::Budget;
use crate::coarse::{CoarseMapCert, ControlFunction, Trend};
use crate::entropy::{BoundedSet, Strategy, STABILIZATION_TOL};
use crate::maps::{MapDescriptor, MapKind};
use crate::orbits::FinalTermFamily;
use crate::spaces::cone::BaseSetSpec;
use crate::spaces::{ChainBlocks, Point, SpaceDescriptor};

macro_rules! presets {
    ($($id:ident),* $(,)?) => {
        /// Names of the preset configs.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
        #[allow(non_camel_case_types, clippy::upper_case_acronyms)]
        pub enum PresetId {
            $($id),*
        }

        impl PresetId {
            pub const ALL: &'static [PresetId] = &[$(PresetId::$id),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(PresetId::$id => stringify!($id)),*
                }
            }
        }
    };
}

presets!(
    LINEAR_1D_DOUBLING,
    LINEAR_2D_DIAG23,
    LINEAR_CONTRACTION,
    E1_CONJUGATED,
    E2_CHAIN,
    E2_CHAIN_SQUARED,
    E3_PRODUCT,
    E5_IDENTITY_GROWTH,
    E6_CONE_CANTOR,
    CO4_CONJUGACY,
    CO9_ITERATE_DEFECT,
    LEM_SELF_PRODUCT,
);

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let wanted = s.trim().to_ascii_uppercase().replace('-', "_");
        PresetId::ALL.iter().copied().find(|p| p.name() == wanted).ok_or_else(|| format!("unknown preset {s:?}"))
    }
}

impl PresetId {
    /// One line describing what the preset reproduces.
    pub fn description(self) -> &'static str {
        match self {
            PresetId::LINEAR_1D_DOUBLING => "doubling on the line: h_inf = log 2",
            PresetId::LINEAR_2D_DIAG23 => "diag(2, 3) on the plane: lower and upper slopes near log 6",
            PresetId::LINEAR_CONTRACTION => "contraction and identity on the plane: h_inf = 0",
            PresetId::E1_CONJUGATED => "coarse conjugate of doubling on the half-plane: infinite h_inf",
            PresetId::E2_CHAIN => "chain of rectangles: h_inf(f) >= log 2",
            PresetId::E2_CHAIN_SQUARED => "chain of rectangles: h_inf(f^2) < 2 h_inf(f)",
            PresetId::E3_PRODUCT => "segment chains: exponents add up and product counts obey their bounds",
            PresetId::E5_IDENTITY_GROWTH => "identity on a bouquet of flats: rate grows linearly in delta",
            PresetId::E6_CONE_CANTOR => "homothety on a Cantor cone: h_inf = (bcd(A) + 1) log 2",
            PresetId::CO4_CONJUGACY => "x^2 and x^2 + 2x are conjugate by a shift, not by the identity",
            PresetId::CO9_ITERATE_DEFECT => "close maps whose second iterates drift apart",
            PresetId::LEM_SELF_PRODUCT => "separated counts of f x f dominate the square of those of f",
        }
    }
}

fn r(v: f64) -> Real {
    Real(v)
}

fn rs(v: &[f64]) -> Vec<Real> {
    v.iter().copied().map(Real).collect()
}

fn map(kind: MapKind, space: SpaceDescriptor) -> MapDescriptor {
    MapDescriptor::new(kind, space).expect("preset maps are valid")
}

fn cell(delta: f64, radii: &[f64], window: (usize, usize), spacing: SpacingConfig) -> CellConfig {
    CellConfig { delta: r(delta), radii: rs(radii), window, spacing, lower: None, upper: None }
}

fn lower(mut c: CellConfig, s: Strategy) -> CellConfig {
    c.lower = Some(s);
    c
}

fn upper(mut c: CellConfig, s: Strategy) -> CellConfig {
    c.upper = Some(s);
    c
}

fn schedule(cells: Vec<CellConfig>) -> ScheduleConfig {
    ScheduleConfig { cells, stabilization_tol: r(STABILIZATION_TOL) }
}

fn estimate(label: &str, map: MapDescriptor, x0: Point, cells: Vec<CellConfig>) -> Task {
    Task::Estimate { label: label.into(), map, x0, schedule: schedule(cells) }
}

fn final_term() -> Strategy {
    Strategy::FinalTerm { family: FinalTermFamily::BallImage }
}

fn hull() -> Strategy {
    Strategy::ShadowHull { lambda: None }
}

fn fixed(v: f64) -> SpacingConfig {
    SpacingConfig::Fixed { value: r(v) }
}

fn config(id: PresetId, expected: Option<&str>, tasks: Vec<Task>, expect: Vec<Check>) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: id.name().into(),
        expected: expected.map(String::from),
        seed: 0,
        budget: Budget::default(),
        tasks,
        expect,
        output: OutputPaths::default(),
    }
}

fn polynomial(coeffs: &[f64], space: SpaceDescriptor) -> MapDescriptor {
    map(MapKind::Polynomial { coeffs: coeffs.to_vec(), reciprocal: 0.0 }, space)
}

fn chain_estimate(label: &str, times: u32, window: (usize, usize)) -> Task {
    let f = map(MapKind::ChainLinear, SpaceDescriptor::Chain { blocks: ChainBlocks::Rectangles });
    let f = if times == 1 { f } else { MapDescriptor::iterate(&f, times).expect("valid iterate") };
    let cells = [2.0, 3.0]
        .iter()
        .map(|&d| lower(cell(d, &[4.0], window, fixed(1.0 / 64.0)), Strategy::OrbitFamily))
        .collect();
    estimate(label, f, Point::new(0, vec![0.0, 0.0]), cells)
}

/// The config of a preset.
pub fn preset(id: PresetId) -> ExperimentConfig {
    let ln2 = 2f64.ln();
    let plane = SpaceDescriptor::euclidean(2);
    let origin2 = Point::at(&[0.0, 0.0]);
    match id {
        PresetId::LINEAR_1D_DOUBLING => {
            let f = map(MapKind::Homothety { factor: 2.0 }, SpaceDescriptor::euclidean(1));
            let radii = [32.0, 64.0, 128.0];
            let spacing = SpacingConfig::PerRadius { fraction: r(0.25) };
            let cells = [4.0, 8.0]
                .iter()
                .map(|&d| upper(lower(cell(d, &radii, (8, 16), spacing), final_term()), hull()))
                .collect();
            config(
                id,
                Some("log 2"),
                vec![estimate("doubling", f, Point::at(&[0.0]), cells)],
                vec![
                    Check::SlopeWithin { task: "doubling".into(), stream: Stream::Extrapolated, target: r(ln2), rel_tol: r(0.15) },
                    Check::LowerLeUpper { task: "doubling".into() },
                ],
            )
        }
        PresetId::LINEAR_2D_DIAG23 => {
            let f = MapDescriptor::diagonal(&[2.0, 3.0]).expect("valid diagonal");
            let spacing = SpacingConfig::PerRadius { fraction: r(0.25) };
            let c = upper(lower(cell(2.0, &[16.0, 32.0], (4, 9), spacing), final_term()), hull());
            let ln6 = 6f64.ln();
            config(
                id,
                Some("log 6"),
                vec![estimate("diag23", f, origin2, vec![c])],
                vec![
                    Check::SlopeWithin { task: "diag23".into(), stream: Stream::Lower, target: r(ln6), rel_tol: r(0.15) },
                    Check::SlopeWithin { task: "diag23".into(), stream: Stream::Upper, target: r(ln6), rel_tol: r(0.15) },
                    Check::LowerLeUpper { task: "diag23".into() },
                ],
            )
        }
        PresetId::LINEAR_CONTRACTION => {
            let contraction = MapDescriptor::diagonal(&[0.5, 0.5]).expect("valid diagonal");
            let identity = MapDescriptor::identity(plane);
            let packed = || {
                vec![
                    lower(cell(1.0, &[4.0, 8.0], (24, 40), fixed(1.0)), final_term()),
                    lower(cell(2.0, &[8.0, 16.0], (24, 40), fixed(1.0)), final_term()),
                ]
            };
            let tasks = vec![
                estimate("contraction", contraction, origin2.clone(), packed()),
                estimate("identity", identity, origin2, packed()),
            ];
            let expect = tasks
                .iter()
                .map(|t| Check::SlopeAtMost { task: t.label().into(), stream: Stream::Extrapolated, max: r(0.10) })
                .collect();
            config(id, Some("0"), tasks, expect)
        }
        PresetId::E1_CONJUGATED => {
            let g = map(MapKind::ConjugatedDoubling, SpaceDescriptor::Halfplane);
            let drift = Strategy::FinalTerm { family: FinalTermFamily::Drift { direction: vec![0.0, 1.0] } };
            let radii = [8.0, 16.0, 32.0];
            let spacing = SpacingConfig::PerDelta { fraction: r(1.0) };
            let cells = [(1.0, (4, 12)), (2.0, (3, 7)), (3.0, (3, 6))]
                .iter()
                .map(|&(d, w)| lower(cell(d, &radii, w, spacing), drift.clone()))
                .collect();
            config(
                id,
                Some("+infinity"),
                vec![estimate("conjugated", g, origin2, cells)],
                vec![
                    Check::SlopePerDelta { task: "conjugated".into(), factor: r(0.8) },
                    Check::InfinityFlag { task: "conjugated".into() },
                ],
            )
        }
        PresetId::E2_CHAIN => config(
            id,
            Some(">= log 2"),
            vec![chain_estimate("f", 1, (8, 14))],
            vec![Check::SlopeAtLeast { task: "f".into(), stream: Stream::Extrapolated, min: r(0.55) }],
        ),
        PresetId::E2_CHAIN_SQUARED => config(
            id,
            Some("h_inf(f) >= log 2 and h_inf(f^2) < 2 h_inf(f)"),
            vec![chain_estimate("f", 1, (8, 14)), chain_estimate("f2", 2, (4, 8))],
            vec![
                Check::SlopeAtLeast { task: "f".into(), stream: Stream::Extrapolated, min: r(0.55) },
                Check::SlopeAtMost { task: "f2".into(), stream: Stream::Extrapolated, max: r(0.85) },
                Check::RateGap { task: "f2".into(), base: "f".into(), factor: r(2.0), margin: r(0.3) },
            ],
        ),
        PresetId::E3_PRODUCT => {
            let side = |blocks| Factor {
                map: map(MapKind::ChainLinear, SpaceDescriptor::Chain { blocks }),
                x0: Point::new(0, vec![0.0]),
            };
            config(
                id,
                None,
                vec![
                    Task::SegmentLengths { label: "segments".into(), count: 4096 },
                    Task::ProductAudit {
                        label: "segment_product".into(),
                        left: side(ChainBlocks::SegmentsF),
                        right: side(ChainBlocks::SegmentsG),
                        n_max: 3,
                        deltas: rs(&[1.0, 2.0]),
                        radii: rs(&[1.0, 2.0, 4.0]),
                        spacing: r(1.0),
                    },
                ],
                vec![
                    Check::SegmentExponents { task: "segments".into() },
                    Check::ProductInequalities { task: "segment_product".into() },
                ],
            )
        }
        PresetId::E5_IDENTITY_GROWTH => {
            let id_map = MapDescriptor::identity(SpaceDescriptor::Bouquet { max_level: 12 });
            let spread = Strategy::FinalTerm { family: FinalTermFamily::AxisSpread };
            let cells = [(1.0, (5, 16)), (2.0, (3, 8)), (4.0, (2, 4))]
                .iter()
                .map(|&(d, w)| lower(cell(d, &[4.0], w, fixed(1.0)), spread.clone()))
                .collect();
            config(
                id,
                Some("+infinity, rate >= delta log 2"),
                vec![estimate("bouquet", id_map, Point::at(&[0.0]), cells)],
                vec![
                    Check::RateRatio {
                        task: "bouquet".into(),
                        pairs: vec![(r(1.0), r(2.0)), (r(2.0), r(4.0))],
                        min: r(1.6),
                        max: r(2.4),
                    },
                    Check::InfinityFlag { task: "bouquet".into() },
                ],
            )
        }
        PresetId::E6_CONE_CANTOR => {
            let cone = SpaceDescriptor::cone(2, BaseSetSpec::CantorArc { levels: 8 });
            let dim = 2f64.ln() / 3f64.ln() + 1.0;
            let f = map(MapKind::Homothety { factor: 2.0 }, cone.clone());
            let c = upper(lower(cell(4.0, &[16.0], (4, 11), fixed(4.0)), final_term()), hull());
            config(
                id,
                Some("(bcd(A) + 1) log 2 ≈ 1.1306"),
                vec![
                    estimate("cone", f, origin2.clone(), vec![c]),
                    Task::Bcd {
                        label: "cone_dimension".into(),
                        space: cone,
                        set: BoundedSet::Ball { center: origin2, radius: 1.0 },
                        epsilons: (2..=6).map(|k| r(3f64.powi(-k))).collect(),
                        spacing_fraction: r(0.25),
                    },
                ],
                vec![
                    Check::DimensionWithin { task: "cone_dimension".into(), target: r(dim), abs_tol: r(0.10) },
                    Check::SlopeWithin { task: "cone".into(), stream: Stream::Extrapolated, target: r(dim * ln2), rel_tol: r(0.20) },
                ],
            )
        }
        PresetId::CO4_CONJUGACY => {
            let line = SpaceDescriptor::euclidean(1);
            let f = polynomial(&[0.0, 0.0, 1.0], line.clone());
            let g = polynomial(&[0.0, 2.0, 1.0], line.clone());
            let iso = |shift: f64| CoarseMapCert::new(polynomial(&[shift, 1.0], line.clone()), ControlFunction::identity()).with_closeness(0.0);
            let psi_id = MapDescriptor::identity(line.clone());
            let compose = |maps: Vec<MapDescriptor>| MapDescriptor::compose(maps).expect("valid composition");
            config(
                id,
                None,
                vec![
                    Task::Conjugacy {
                        label: "shift".into(),
                        f,
                        g: g.clone(),
                        phi: iso(-1.0),
                        psi: iso(1.0),
                        radii: rs(&[10.0, 100.0, 1000.0]),
                        spacing: r(1.0),
                    },
                    Task::Embedding { label: "shift_embedding".into(), cert: iso(-1.0), radius: r(1000.0), samples: 1000 },
                    Task::DefectCurve {
                        label: "identity".into(),
                        f1: compose(vec![psi_id.clone(), g]),
                        f2: compose(vec![polynomial(&[0.0, 0.0, 1.0], line), psi_id]),
                        radii: rs(&[100.0, 1000.0, 10000.0]),
                        spacing: r(1.0),
                    },
                ],
                vec![
                    Check::DefectsZero { task: "shift".into() },
                    Check::EmbeddingPassed { task: "shift_embedding".into() },
                    Check::TrendIs { task: "identity".into(), trend: Trend::Growing },
                    Check::DefectRatio { task: "identity".into(), target: r(2.0), rel_tol: r(0.05) },
                ],
            )
        }
        PresetId::CO9_ITERATE_DEFECT => {
            let half = SpaceDescriptor::HalfLine { start: 2.0 };
            let f = map(MapKind::Power { exponent: 2.0 }, half.clone());
            let g = map(MapKind::Polynomial { coeffs: vec![0.0, 0.0, 1.0], reciprocal: 1.0 }, half);
            let twice = |m: &MapDescriptor| MapDescriptor::iterate(m, 2).expect("valid iterate");
            config(
                id,
                None,
                vec![
                    Task::DefectCurve {
                        label: "maps".into(),
                        f1: g.clone(),
                        f2: f.clone(),
                        radii: rs(&[25.0, 50.0, 100.0, 200.0]),
                        spacing: r(1.0),
                    },
                    Task::DefectCurve {
                        label: "iterates".into(),
                        f1: twice(&g),
                        f2: twice(&f),
                        radii: rs(&[25.0, 50.0, 100.0]),
                        spacing: r(1.0),
                    },
                ],
                vec![
                    Check::DefectAtMost { task: "maps".into(), max: r(0.5) },
                    Check::TrendIs { task: "maps".into(), trend: Trend::Bounded },
                    Check::TrendIs { task: "iterates".into(), trend: Trend::Growing },
                    Check::DefectAtLeast { task: "iterates".into(), radius: r(100.0), factor: r(1.9) },
                ],
            )
        }
        PresetId::LEM_SELF_PRODUCT => {
            let line = SpaceDescriptor::euclidean(1);
            let identity = Factor { map: MapDescriptor::identity(line.clone()), x0: Point::at(&[0.0]) };
            let doubling = Factor { map: map(MapKind::Homothety { factor: 2.0 }, line), x0: Point::at(&[0.0]) };
            let audit = |label: &str, left: &Factor, right: &Factor| Task::ProductAudit {
                label: label.into(),
                left: left.clone(),
                right: right.clone(),
                n_max: 3,
                deltas: rs(&[1.0, 2.0]),
                radii: rs(&[1.0, 2.0, 3.0]),
                spacing: r(1.0),
            };
            config(
                id,
                None,
                vec![audit("identity_squared", &identity, &identity), audit("doubling_identity", &doubling, &identity)],
                vec![
                    Check::ProductInequalities { task: "identity_squared".into() },
                    Check::ProductInequalities { task: "doubling_identity".into() },
                ],
            )
        }
    }
}
