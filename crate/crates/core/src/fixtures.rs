//! Small synthetic processes with golden outputs, one per scenario and per
//! oracle used by the tests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{detect_scenarios, DetectionConfig};
use crate::evaluation::non_dominated;
use crate::model::{
    parse_model, serialize_model, Activity, ArrivalModel, Calendar, CalendarInterval, DurationDistribution, FlowArc,
    Gateway, GatewayKind, ProcessModel, ResourceProfile,
};
use crate::pareto::Point;
use crate::policy::{
    parse_policies, serialize_policies, ActivationRule, BatchType, BatchingPolicy, Condition, ConditionGroup, CostModel,
    PolicySet, ResourceCostMode,
};
use crate::sim::{simulate, evaluate_objectives_with, SimConfig};
use crate::time::{Seconds, Weekday, HOUR, MINUTE};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Document { path: PathBuf, message: String },
    #[error("fixture `{name}`: {message}")]
    Run { name: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FixtureError + '_ {
    move |source| FixtureError::Io { path: path.to_path_buf(), source }
}

/// Exhaustive grid for the oracle front: every size threshold in `sizes`
/// combined with both batch types, on one activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleSpec {
    pub activity: String,
    pub sizes: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FixtureMeta {
    pub name: String,
    pub description: String,
    /// Scenarios this fixture exists to trigger.
    #[serde(default)]
    pub expected_scenarios: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub meta: FixtureMeta,
    pub model: ProcessModel,
    pub policies: PolicySet,
    pub sim: SimConfig,
}

impl Fixture {
    pub fn name(&self) -> &str {
        &self.meta.name
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    fixtures: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ManifestEntry {
    name: String,
    description: String,
    expected_scenarios: Vec<u8>,
}

/// `fixtures/` at the workspace root.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

// ---------------------------------------------------------------- builders

const WORKWEEK: [Weekday; 5] = [Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu, Weekday::Fri];

fn fixed(s: Seconds) -> DurationDistribution {
    DurationDistribution::fixed(s)
}

fn act(id: &str, duration: DurationDistribution, resources: &[&str], fixed_cost: f64) -> Activity {
    Activity {
        id: id.into(),
        name: String::new(),
        duration,
        eligible_resources: resources.iter().map(|r| r.to_string()).collect(),
        fixed_cost_per_execution: fixed_cost,
    }
}

fn res(id: &str, calendar: Calendar, cost_per_hour: f64) -> ResourceProfile {
    ResourceProfile { id: id.into(), calendar, cost_per_hour }
}

fn arrivals(inter: DurationDistribution, calendar: Calendar, cases: u32) -> ArrivalModel {
    ArrivalModel { inter_arrival: inter, calendar, total_cases: cases }
}

fn arc(id: String, source: &str, target: &str) -> FlowArc {
    FlowArc { id, source: source.into(), target: target.into() }
}

/// `start -> a1 -> ... -> an -> end`.
fn linear(activities: Vec<Activity>, resources: Vec<ResourceProfile>, arrival: ArrivalModel) -> ProcessModel {
    let mut nodes = vec!["start".to_string()];
    nodes.extend(activities.iter().map(|a| a.id.clone()));
    nodes.push("end".into());
    let arcs = nodes.windows(2).enumerate().map(|(i, w)| arc(format!("f{i}"), &w[0], &w[1])).collect();
    ProcessModel {
        activities,
        gateways: Vec::new(),
        arcs,
        resources,
        arrival,
        start_node: "start".into(),
        end_nodes: vec!["end".into()],
    }
}

fn policy(activity: &str, batch_type: BatchType, rule: ActivationRule, cost: CostModel) -> BatchingPolicy {
    BatchingPolicy { activity_id: activity.into(), batch_type, rule, cost }
}

fn size_rule(n: u32) -> ActivationRule {
    ActivationRule::single(Condition::Size { threshold: n })
}

fn hourly(cases: u32) -> ArrivalModel {
    arrivals(fixed(HOUR), Calendar::always(), cases)
}

fn fixture(
    name: &str,
    description: &str,
    expected: &[u8],
    model: ProcessModel,
    policies: Vec<BatchingPolicy>,
    seed: u64,
) -> Fixture {
    Fixture {
        meta: FixtureMeta {
            name: name.into(),
            description: description.into(),
            expected_scenarios: expected.to_vec(),
            oracle: None,
        },
        model,
        policies: PolicySet::from_policies(policies),
        sim: SimConfig::with_seed(seed),
    }
}

// ---------------------------------------------------------------- catalog

/// Every committed fixture, in manifest order.
pub fn catalog() -> Vec<Fixture> {
    let mut out = vec![
        oracle_fixture(),
        fixture(
            "two-batch",
            "Four hourly cases form two parallel batches of two on a resource costing 10 per hour; fixed batch cost 3.",
            &[],
            linear(vec![act("A", fixed(2 * HOUR), &["r1"], 0.0)], vec![res("r1", Calendar::always(), 10.0)], hourly(4)),
            vec![policy("A", BatchType::Parallel, size_rule(2), CostModel::fixed(3.0))],
            1,
        ),
        fixture(
            "fifo",
            "Unbatched single-server queue with exponential inter-arrival and service times.",
            &[],
            linear(
                vec![act("A", DurationDistribution::Exponential { mean: 45.0 * MINUTE as f64 }, &["r1"], 1.0)],
                vec![res("r1", Calendar::always(), 0.0)],
                arrivals(DurationDistribution::Exponential { mean: HOUR as f64 }, Calendar::always(), 200),
            ),
            vec![],
            7,
        ),
        circadian_fixture(),
        gateways_fixture(),
    ];
    out.extend(scenario_fixtures());
    out
}

/// Single activity whose size threshold trades cycle time for amortized
/// fixed cost; sequential batches are never better than parallel ones.
fn oracle_fixture() -> Fixture {
    let mut f = fixture(
        "single-activity",
        "Single activity, 60 hourly cases, 10-minute tasks, fixed cost 10 per batch; size thresholds 1..5 trade cycle time against cost.",
        &[],
        linear(vec![act("A", fixed(10 * MINUTE), &["r1"], 10.0)], vec![res("r1", Calendar::always(), 0.0)], hourly(60)),
        vec![policy("A", BatchType::Parallel, size_rule(3), CostModel::fixed(10.0))],
        1,
    );
    f.meta.oracle = Some(OracleSpec { activity: "A".into(), sizes: (1..=5).collect() });
    f
}

/// Arrivals peak on Monday mornings, the only resource works weekday
/// mornings, and the initial rule releases batches on Friday afternoon.
fn circadian_fixture() -> Fixture {
    let arrival_cal = Calendar::new(vec![CalendarInterval { day: Weekday::Mon, start: 7 * HOUR, end: 8 * HOUR }]);
    let rule = ActivationRule::new(vec![ConditionGroup::new(vec![Condition::day(Weekday::Fri), Condition::hour(16)])]);
    fixture(
        "circadian",
        "Cases arrive Monday 07:00-08:00, the resource works weekdays 08:00-12:00, batches are released Friday 16:00.",
        &[3],
        linear(
            vec![act("A", fixed(30 * MINUTE), &["r1"], 15.0)],
            vec![res("r1", Calendar::daily(&WORKWEEK, 8 * HOUR, 12 * HOUR), 20.0)],
            arrivals(DurationDistribution::Exponential { mean: 5.0 * MINUTE as f64 }, arrival_cal, 120),
        ),
        vec![policy("A", BatchType::Parallel, rule, CostModel::fixed(15.0))],
        11,
    )
}

fn gateways_fixture() -> Fixture {
    let a = |id: &str| act(id, DurationDistribution::Exponential { mean: 20.0 * MINUTE as f64 }, &["r1", "r2"], 1.0);
    let g = |id: &str, kind: GatewayKind, probs: &[(&str, f64)]| Gateway {
        id: id.into(),
        kind,
        branch_probabilities: probs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    };
    let edges = [
        ("start", "xs"),
        ("xs", "A"),
        ("xs", "B"),
        ("A", "xj"),
        ("B", "xj"),
        ("xj", "as"),
        ("as", "C"),
        ("as", "os"),
        ("os", "D"),
        ("os", "E"),
        ("D", "oj"),
        ("E", "oj"),
        ("oj", "aj"),
        ("C", "aj"),
        ("aj", "end"),
    ];
    let arcs = edges.iter().map(|(s, t)| arc(format!("{s}-{t}"), s, t)).collect();
    let model = ProcessModel {
        activities: ["A", "B", "C", "D", "E"].iter().map(|id| a(id)).collect(),
        gateways: vec![
            g("xs", GatewayKind::XorSplit, &[("xs-A", 0.7), ("xs-B", 0.3)]),
            g("xj", GatewayKind::XorJoin, &[]),
            g("as", GatewayKind::AndSplit, &[]),
            g("aj", GatewayKind::AndJoin, &[]),
            g("os", GatewayKind::OrSplit, &[("os-D", 0.6), ("os-E", 0.5)]),
            g("oj", GatewayKind::OrJoin, &[]),
        ],
        arcs,
        resources: vec![res("r1", Calendar::always(), 12.0), res("r2", Calendar::daily(&WORKWEEK, 9 * HOUR, 17 * HOUR), 8.0)],
        arrival: arrivals(DurationDistribution::Exponential { mean: HOUR as f64 }, Calendar::always(), 80),
        start_node: "start".into(),
        end_nodes: vec!["end".into()],
    };
    fixture(
        "gateways",
        "XOR split/join, then an AND split whose second branch holds an OR split/join; C batched sequentially, D in parallel.",
        &[],
        model,
        vec![
            policy("C", BatchType::Sequential, size_rule(2), CostModel::fixed(1.0)),
            policy(
                "D",
                BatchType::Parallel,
                ActivationRule::new(vec![
                    ConditionGroup::new(vec![Condition::Size { threshold: 3 }]),
                    ConditionGroup::new(vec![Condition::WtFirst { threshold: 2 * HOUR }]),
                ]),
                CostModel::fixed(1.0),
            ),
        ],
        5,
    )
}

fn scenario_fixtures() -> Vec<Fixture> {
    let always = || Calendar::always();
    let r1 = || vec![res("r1", Calendar::always(), 10.0)];
    let quick = |id: &str| act(id, fixed(10 * MINUTE), &["r1"], 1.0);
    let mon_morning = || Calendar::new(vec![CalendarInterval { day: Weekday::Mon, start: 8 * HOUR, end: 10 * HOUR }]);
    vec![
        fixture(
            "s01-long-first-wait",
            "A size-4 batch accumulates hourly cases behind an unbatched intake step.",
            &[1],
            linear(vec![quick("A"), quick("B")], r1(), hourly(40)),
            vec![policy("B", BatchType::Parallel, size_rule(4), CostModel::fixed(1.0))],
            1,
        ),
        fixture(
            "s02-long-last-wait",
            "A batch released 4.5 hours after its first case leaves the last case waiting half an hour.",
            &[2],
            linear(vec![quick("A"), quick("B")], r1(), hourly(40)),
            vec![policy(
                "B",
                BatchType::Parallel,
                ActivationRule::single(Condition::WtFirst { threshold: 4 * HOUR + 30 * MINUTE }),
                CostModel::fixed(1.0),
            )],
            1,
        ),
        fixture(
            "s03-concentrated-arrivals",
            "Every case arrives on Monday between 08:00 and 10:00; the activity is unbatched.",
            &[3],
            linear(vec![quick("A")], r1(), arrivals(fixed(20 * MINUTE), mon_morning(), 36)),
            vec![],
            1,
        ),
        fixture(
            "s04-thin-availability",
            "Two weekday resources overlap 08:00-15:00 only; work still starts in the 15:00-17:00 tail.",
            &[4],
            linear(
                vec![act("A", fixed(30 * MINUTE), &["r1", "r2"], 1.0)],
                vec![
                    res("r1", Calendar::daily(&WORKWEEK, 8 * HOUR, 17 * HOUR), 10.0),
                    res("r2", Calendar::daily(&WORKWEEK, 8 * HOUR, 15 * HOUR), 10.0),
                ],
                arrivals(fixed(HOUR), Calendar::daily(&WORKWEEK, 8 * HOUR, 17 * HOUR), 60),
            ),
            vec![],
            1,
        ),
        fixture(
            "s05-size-too-large",
            "Size threshold 3 with hourly arrivals makes the first case wait two hours.",
            &[5],
            linear(vec![quick("A")], r1(), hourly(30)),
            vec![policy("A", BatchType::Parallel, size_rule(3), CostModel::fixed(1.0))],
            1,
        ),
        fixture(
            "s06-long-parallel-work",
            "A two-hour parallel activity batches only three cases while the other step takes ten minutes.",
            &[6],
            linear(vec![quick("A"), act("B", fixed(2 * HOUR), &["r1"], 1.0)], r1(), hourly(30)),
            vec![policy("B", BatchType::Parallel, size_rule(3), CostModel::fixed(1.0))],
            1,
        ),
        fixture(
            "s07-sequential-batches",
            "Sequential batches of three: later members wait for earlier ones.",
            &[7],
            linear(vec![quick("A")], r1(), hourly(30)),
            vec![policy("A", BatchType::Sequential, size_rule(3), CostModel::fixed(1.0))],
            1,
        ),
        fixture(
            "s08-batches-span-closures",
            "Three-hour batches on a 09:00-17:00 weekday resource frequently run past closing time.",
            &[8, 9],
            linear(
                vec![act("A", fixed(3 * HOUR), &["r1"], 1.0)],
                vec![res("r1", Calendar::daily(&WORKWEEK, 9 * HOUR, 17 * HOUR), 10.0)],
                arrivals(fixed(3 * HOUR), always(), 40),
            ),
            vec![policy("A", BatchType::Parallel, size_rule(2), CostModel::fixed(1.0))],
            1,
        ),
        fixture(
            "s09-misaligned-release",
            "Batches released by a two-hour timeout start late in the afternoon and pause overnight.",
            &[9],
            linear(
                vec![act("A", fixed(3 * HOUR), &["r1"], 1.0)],
                vec![res("r1", Calendar::daily(&WORKWEEK, 9 * HOUR, 17 * HOUR), 10.0)],
                arrivals(fixed(5 * HOUR), always(), 40),
            ),
            vec![policy(
                "A",
                BatchType::Parallel,
                ActivationRule::single(Condition::WtFirst { threshold: 2 * HOUR }),
                CostModel::fixed(1.0),
            )],
            1,
        ),
        fixture(
            "s10-economies-of-scale",
            "Variable batch cost grows sublinearly in size, yet batches hold only two cases.",
            &[10],
            linear(vec![quick("A")], r1(), hourly(30)),
            vec![policy(
                "A",
                BatchType::Parallel,
                size_rule(2),
                CostModel { fixed: 1.0, variable: vec![(1, 10.0), (4, 20.0)], resource: ResourceCostMode::PerTime },
            )],
            1,
        ),
        fixture(
            "s11-dominant-cost",
            "An expensive unbatched activity carries most of the total cost.",
            &[11],
            linear(vec![quick("A"), act("B", fixed(10 * MINUTE), &["r1"], 50.0)], r1(), hourly(30)),
            vec![],
            1,
        ),
        fixture(
            "s12-frequent-activity",
            "An activity repeated by every case makes up half of all executions.",
            &[12],
            linear(vec![quick("A"), quick("B")], r1(), hourly(30)),
            vec![],
            1,
        ),
        fixture(
            "s13-similar-cheap-activity",
            "A cheap activity follows an expensive one within minutes, so both are enabled at the same hours.",
            &[13],
            linear(vec![act("A", fixed(5 * MINUTE), &["r1"], 100.0), act("B", fixed(5 * MINUTE), &["r1"], 1.0)], vec![res("r1", always(), 0.0)], arrivals(fixed(3 * HOUR), Calendar::daily(&WORKWEEK, 8 * HOUR, 16 * HOUR), 40)),
            vec![],
            1,
        ),
        fixture(
            "s14-isolated-cheap-batch",
            "A free, infrequent batched step enabled at hours no other activity sees.",
            &[14],
            linear(
                vec![
                    act("A", fixed(10 * MINUTE), &["r1"], 5.0),
                    act("B", fixed(5 * HOUR), &["r1"], 5.0),
                    act("C", fixed(10 * MINUTE), &["r2"], 0.0),
                    act("D", fixed(5 * HOUR), &["r1"], 5.0),
                ],
                vec![res("r1", always(), 10.0), res("r2", always(), 0.0)],
                arrivals(fixed(20 * MINUTE), mon_morning(), 30),
            ),
            vec![policy(
                "C",
                BatchType::Parallel,
                ActivationRule::single(Condition::WtFirst { threshold: 6 * HOUR }),
                CostModel::default(),
            )],
            1,
        ),
        fixture(
            "s15-no-cost-benefit",
            "Sequential batches billed per busy hour: cost per case does not fall as batches grow.",
            &[15],
            linear(vec![act("A", fixed(HOUR), &["r1"], 0.0)], r1(), arrivals(fixed(2 * HOUR), always(), 10)),
            vec![policy("A", BatchType::Sequential, size_rule(3), CostModel::default())],
            1,
        ),
        fixture(
            "s16-overloaded-resource",
            "Two-hour parallel batches of two keep the only resource busy almost all the time.",
            &[16],
            linear(vec![act("A", fixed(2 * HOUR), &["r1"], 1.0)], r1(), hourly(40)),
            vec![policy("A", BatchType::Parallel, size_rule(2), CostModel::fixed(1.0))],
            1,
        ),
        fixture(
            "s17-idle-resource",
            "Ten-minute unbatched tasks every hour leave the resource mostly idle.",
            &[17],
            linear(vec![quick("A")], r1(), hourly(30)),
            vec![],
            1,
        ),
        fixture(
            "s18-resource-switching",
            "Two-hour tasks arriving hourly alternate between two resources.",
            &[18],
            linear(
                vec![act("A", fixed(2 * HOUR), &["r1", "r2"], 1.0)],
                vec![res("r1", always(), 10.0), res("r2", always(), 10.0)],
                hourly(30),
            ),
            vec![],
            1,
        ),
        fixture(
            "s19-stable-allocation",
            "Size-3 batches always served by the same resource.",
            &[19],
            linear(vec![quick("A")], r1(), hourly(30)),
            vec![policy("A", BatchType::Parallel, size_rule(3), CostModel::fixed(1.0))],
            1,
        ),
    ]
}

// ------------------------------------------------------ metric and reward pairs

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    AveragedHausdorff,
    Purity,
}

/// A pair of point sets with the metric value they must produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MetricFixture {
    pub name: String,
    pub metric: Metric,
    pub approx: Vec<Point>,
    pub reference: Vec<Point>,
    pub expected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardKind {
    Dominate,
    Improve,
    Penalty,
}

/// A front, a candidate point and the reward the candidate must earn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RewardFixture {
    pub name: String,
    pub front: Vec<Point>,
    pub candidate: Point,
    pub expected: RewardKind,
}

pub fn metric_catalog() -> Vec<MetricFixture> {
    let m = |name: &str, metric, approx: &[Point], reference: &[Point], expected| MetricFixture {
        name: name.into(),
        metric,
        approx: approx.to_vec(),
        reference: reference.to_vec(),
        expected,
    };
    vec![
        m("hausdorff-single-pair", Metric::AveragedHausdorff, &[(0.0, 0.0)], &[(3.0, 4.0)], 5.0),
        m("hausdorff-asymmetric", Metric::AveragedHausdorff, &[(0.0, 0.0), (3.0, 4.0)], &[(0.0, 0.0)], 0.5 * 12.5f64.sqrt()),
        m("purity-subset", Metric::Purity, &[(1.0, 5.0), (5.0, 1.0)], &[(1.0, 5.0), (3.0, 3.0), (5.0, 1.0)], 1.0),
        m("purity-disjoint", Metric::Purity, &[(2.0, 6.0), (6.0, 2.0)], &[(1.0, 5.0), (5.0, 1.0)], 0.0),
        m(
            "purity-half",
            Metric::Purity,
            &[(1.0, 5.0), (2.0, 4.5), (4.0, 2.5), (5.0, 1.0)],
            &[(1.0, 5.0), (2.0, 4.0), (4.0, 2.0), (5.0, 1.0)],
            0.5,
        ),
    ]
}

pub fn reward_catalog() -> Vec<RewardFixture> {
    let r = |name: &str, front: &[Point], candidate, expected| RewardFixture {
        name: name.into(),
        front: front.to_vec(),
        candidate,
        expected,
    };
    vec![
        r("reward-dominate", &[(3.0, 5.0), (4.0, 4.0), (5.0, 3.0)], (2.0, 2.0), RewardKind::Dominate),
        r("reward-improve", &[(1.0, 5.0), (5.0, 1.0)], (2.0, 2.0), RewardKind::Improve),
        r("reward-penalty", &[(1.0, 5.0), (5.0, 1.0)], (6.0, 6.0), RewardKind::Penalty),
    ]
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, FixtureError> {
    serde_json::from_str(&read(path)?).map_err(|e| doc_err(path, e))
}

fn json_names(dir: &Path) -> Result<Vec<PathBuf>, FixtureError> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    Ok(v)
}

/// Metric pairs under `root/metrics`, sorted by file name.
pub fn load_metric_fixtures(root: &Path) -> Result<Vec<MetricFixture>, FixtureError> {
    json_names(&root.join("metrics"))?.iter().map(|p| load_json(p)).collect()
}

/// Reward cases under `root/rewards`, sorted by file name.
pub fn load_reward_fixtures(root: &Path) -> Result<Vec<RewardFixture>, FixtureError> {
    json_names(&root.join("rewards"))?.iter().map(|p| load_json(p)).collect()
}

// ---------------------------------------------------------------- disk i/o

fn write(path: &Path, text: &str) -> Result<(), FixtureError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn read(path: &Path) -> Result<String, FixtureError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn doc_err(path: &Path, e: impl std::fmt::Display) -> FixtureError {
    FixtureError::Document { path: path.to_path_buf(), message: e.to_string() }
}

/// Writes the input documents of `fixtures` and the manifest under `root`.
pub fn write_inputs(root: &Path, fixtures: &[Fixture]) -> Result<(), FixtureError> {
    for f in fixtures {
        let dir = root.join(f.name());
        write(&dir.join("fixture.json"), &json(&f.meta))?;
        write(&dir.join("model.json"), &(serialize_model(&f.model) + "\n"))?;
        write(&dir.join("policies.json"), &(serialize_policies(&f.policies) + "\n"))?;
        write(&dir.join("sim.json"), &json(&f.sim))?;
    }
    let manifest = Manifest {
        fixtures: fixtures
            .iter()
            .map(|f| ManifestEntry {
                name: f.meta.name.clone(),
                description: f.meta.description.clone(),
                expected_scenarios: f.meta.expected_scenarios.clone(),
            })
            .collect(),
    };
    write(&root.join("manifest.json"), &json(&manifest))
}

pub fn write_pair_fixtures(root: &Path) -> Result<(), FixtureError> {
    for m in metric_catalog() {
        write(&root.join("metrics").join(format!("{}.json", m.name)), &json(&m))?;
    }
    for r in reward_catalog() {
        write(&root.join("rewards").join(format!("{}.json", r.name)), &json(&r))?;
    }
    Ok(())
}

/// Names listed in `root/manifest.json`, in order.
pub fn list(root: &Path) -> Result<Vec<String>, FixtureError> {
    let path = root.join("manifest.json");
    let m: Manifest = serde_json::from_str(&read(&path)?).map_err(|e| doc_err(&path, e))?;
    Ok(m.fixtures.into_iter().map(|e| e.name).collect())
}

pub fn load(root: &Path, name: &str) -> Result<Fixture, FixtureError> {
    let dir = root.join(name);
    let p = dir.join("fixture.json");
    let meta: FixtureMeta = serde_json::from_str(&read(&p)?).map_err(|e| doc_err(&p, e))?;
    let p = dir.join("model.json");
    let model = parse_model(&read(&p)?).map_err(|e| doc_err(&p, e))?;
    let p = dir.join("policies.json");
    let policies = parse_policies(&read(&p)?).map_err(|e| doc_err(&p, e))?;
    let p = dir.join("sim.json");
    let sim: SimConfig = serde_json::from_str(&read(&p)?).map_err(|e| doc_err(&p, e))?;
    Ok(Fixture { meta, model, policies, sim })
}

pub fn load_all(root: &Path) -> Result<Vec<Fixture>, FixtureError> {
    list(root)?.iter().map(|n| load(root, n)).collect()
}

// ---------------------------------------------------------------- goldens

/// Every (batch type, size) combination of the oracle grid with its point.
pub fn enumerate_oracle(f: &Fixture) -> Result<Vec<(BatchType, u32, Point)>, FixtureError> {
    let spec = f.meta.oracle.as_ref().ok_or_else(|| FixtureError::Run {
        name: f.meta.name.clone(),
        message: "fixture has no oracle grid".into(),
    })?;
    let base = f.policies.get(&spec.activity).cloned().unwrap_or_else(|| {
        policy(&spec.activity, BatchType::Parallel, ActivationRule::default(), CostModel::default())
    });
    let mut out = Vec::new();
    for bt in [BatchType::Sequential, BatchType::Parallel] {
        for &n in &spec.sizes {
            let mut ps = f.policies.clone();
            ps.insert(BatchingPolicy { batch_type: bt, rule: size_rule(n), ..base.clone() });
            let run = simulate(&f.model, &ps, &f.sim).map_err(|e| FixtureError::Run { name: f.meta.name.clone(), message: e.to_string() })?;
            let obj = evaluate_objectives_with(&run.log, f.sim.warmup, f.sim.cycle_time_mode)
                .map_err(|e| FixtureError::Run { name: f.meta.name.clone(), message: e.to_string() })?;
            out.push((bt, n, obj.point()));
        }
    }
    Ok(out)
}

/// Non-dominated points of the oracle grid.
pub fn oracle_front(f: &Fixture) -> Result<Vec<Point>, FixtureError> {
    let all: Vec<Point> = enumerate_oracle(f)?.into_iter().map(|(_, _, p)| p).collect();
    Ok(non_dominated(&all))
}

pub fn points_csv(points: &[Point]) -> String {
    let mut out = String::from("avg_cycle_time,avg_cost\n");
    for (x, y) in points {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DetectedScenario {
    scenario: u8,
    activity: String,
}

/// Golden files of one fixture, as `(relative path, contents)`.
pub fn golden_files(f: &Fixture) -> Result<Vec<(String, String)>, FixtureError> {
    let run_err = |e: &dyn std::fmt::Display| FixtureError::Run { name: f.meta.name.clone(), message: e.to_string() };
    let out = simulate(&f.model, &f.policies, &f.sim).map_err(|e| run_err(&e))?;
    let detected = detect_scenarios(&out.log, &f.model, &f.policies, &DetectionConfig::default()).map_err(|e| run_err(&e))?;
    let detected: Vec<DetectedScenario> =
        detected.into_iter().map(|s| DetectedScenario { scenario: s.scenario, activity: s.activity_id }).collect();
    let mut files = vec![
        ("golden/instances.csv".to_string(), out.log.instances_csv()),
        ("golden/batches.csv".to_string(), out.log.batches_csv()),
        ("golden/objectives.json".to_string(), json(&out.objectives)),
        ("golden/scenarios.json".to_string(), json(&detected)),
    ];
    if f.meta.oracle.is_some() {
        files.push(("golden/oracle_front.csv".to_string(), points_csv(&oracle_front(f)?)));
    }
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldenMode {
    Write,
    Check,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldenReport {
    pub checked: usize,
    /// `(fixture, file)` pairs whose recomputed contents differ from disk.
    pub diffs: Vec<(String, String)>,
    pub written: Vec<PathBuf>,
}

impl GoldenReport {
    pub fn fixtures_with_diffs(&self) -> Vec<String> {
        let mut v: Vec<String> = self.diffs.iter().map(|(f, _)| f.clone()).collect();
        v.dedup();
        v
    }
}

/// Recomputes the golden files of every fixture listed under `root` from the
/// input documents on disk, then writes them or compares them with disk.
pub fn regenerate_goldens(root: &Path, mode: GoldenMode) -> Result<GoldenReport, FixtureError> {
    let mut report = GoldenReport::default();
    for f in load_all(root)? {
        let dir = root.join(f.name());
        for (rel, text) in golden_files(&f)? {
            let path = dir.join(&rel);
            report.checked += 1;
            let current = fs::read_to_string(&path).ok();
            if current.as_deref() != Some(text.as_str()) {
                report.diffs.push((f.meta.name.clone(), rel));
                if mode == GoldenMode::Write {
                    write(&path, &text)?;
                    report.written.push(path);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    #[test]
    fn catalog_is_valid_and_small() {
        for f in catalog() {
            let r = validate_model(&f.model);
            assert!(r.is_valid(), "{}: {r}", f.name());
            assert!(f.policies.check(&f.model).is_ok(), "{}", f.name());
            assert!(f.model.activities.len() <= 5, "{}", f.name());
            assert!(f.sim.cases(&f.model) <= 200, "{}", f.name());
        }
    }

    #[test]
    fn committed_inputs_match_catalog() {
        let root = fixtures_dir();
        let names: Vec<String> = catalog().iter().map(|f| f.meta.name.clone()).collect();
        assert_eq!(list(&root).unwrap(), names);
        for f in catalog() {
            assert_eq!(load(&root, f.name()).unwrap(), f, "{} differs from its committed documents", f.name());
        }
    }

    #[test]
    fn scenario_coverage() {
        let mut seen = std::collections::BTreeSet::new();
        for f in catalog() {
            let out = simulate(&f.model, &f.policies, &f.sim).unwrap();
            let found = detect_scenarios(&out.log, &f.model, &f.policies, &DetectionConfig::default()).unwrap();
            let ids: Vec<u8> = found.iter().map(|s| s.scenario).collect();
            for e in &f.meta.expected_scenarios {
                assert!(ids.contains(e), "{} should trigger S{e}, found {ids:?}", f.name());
            }
            seen.extend(ids);
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), (1..=19).collect::<Vec<u8>>());
    }

    #[test]
    fn committed_pairs_match_catalog() {
        let root = fixtures_dir();
        let mut metrics = metric_catalog();
        metrics.sort_by(|a, b| a.name.cmp(&b.name));
        assert_eq!(load_metric_fixtures(&root).unwrap(), metrics);
        let mut rewards = reward_catalog();
        rewards.sort_by(|a, b| a.name.cmp(&b.name));
        assert_eq!(load_reward_fixtures(&root).unwrap(), rewards);
    }

    #[test]
    fn committed_goldens_are_current() {
        let report = regenerate_goldens(&fixtures_dir(), GoldenMode::Check).unwrap();
        assert!(report.diffs.is_empty(), "stale goldens: {:?}", report.diffs);
        assert!(report.checked >= 4 * catalog().len());
    }

    fn copy_tree(from: &Path, to: &Path) {
        fs::create_dir_all(to).unwrap();
        for e in fs::read_dir(from).unwrap() {
            let e = e.unwrap();
            let dest = to.join(e.file_name());
            if e.file_type().unwrap().is_dir() {
                copy_tree(&e.path(), &dest);
            } else {
                fs::copy(e.path(), dest).unwrap();
            }
        }
    }

    #[test]
    fn threshold_change_diffs_only_its_fixture() {
        let tmp = tempfile::tempdir().unwrap();
        copy_tree(&fixtures_dir(), tmp.path());
        let path = tmp.path().join("s05-size-too-large/policies.json");
        let text = fs::read_to_string(&path).unwrap().replace("\"threshold\": 3", "\"threshold\": 4");
        fs::write(&path, text).unwrap();
        let report = regenerate_goldens(tmp.path(), GoldenMode::Check).unwrap();
        assert_eq!(report.fixtures_with_diffs(), vec!["s05-size-too-large".to_string()]);
        assert!(report.written.is_empty());

        let written = regenerate_goldens(tmp.path(), GoldenMode::Write).unwrap();
        assert_eq!(written.written.len(), written.diffs.len());
        assert!(regenerate_goldens(tmp.path(), GoldenMode::Check).unwrap().diffs.is_empty());
    }

    #[test]
    fn oracle_grid_is_small() {
        let f = catalog().into_iter().find(|f| f.meta.oracle.is_some()).unwrap();
        let grid = enumerate_oracle(&f).unwrap();
        assert!(grid.len() <= 10);
        let front = oracle_front(&f).unwrap();
        // Parallel batches of n cost 10/n per case and finish each batch
        // 10 minutes after its last arrival.
        let expected: Vec<Point> =
            (1..=5).map(|n| (3600.0 - 3000.0 / n as f64, 10.0 / n as f64)).collect();
        assert_eq!(front.len(), expected.len());
        for (a, b) in front.iter().zip(&expected) {
            assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn fifo_waits_follow_lindley() {
        let f = catalog().into_iter().find(|f| f.name() == "fifo").unwrap();
        let log = simulate(&f.model, &f.policies, &f.sim).unwrap().log;
        let mut recs: Vec<_> = log.records.iter().collect();
        recs.sort_by_key(|r| (r.enable_time, r.case_id));
        let mut wait = 0i64;
        for (i, r) in recs.iter().enumerate() {
            if i > 0 {
                let prev = recs[i - 1];
                let service = prev.end_time - prev.start_time;
                wait = (wait + service - (r.enable_time - prev.enable_time)).max(0);
            }
            assert_eq!(r.start_time - r.enable_time, wait, "case {}", r.case_id);
        }
    }

    #[test]
    fn pair_fixture_values() {
        for m in metric_catalog() {
            let a = crate::evaluation::FrontPointSet::new("a", m.approx.clone());
            let r = crate::evaluation::FrontPointSet::new("r", m.reference.clone());
            let got = match m.metric {
                Metric::AveragedHausdorff => crate::evaluation::averaged_hausdorff(&a, &r).unwrap(),
                Metric::Purity => crate::evaluation::purity(&a, &r).unwrap(),
            };
            assert!((got - m.expected).abs() < 1e-9, "{}: {got}", m.name);
        }
    }
}
