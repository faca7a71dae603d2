//! Random three-layer network: input layer -> recurrent E/I pool -> output.
//!
//! Each allowed ordered pair of a class is an independent Bernoulli trial.
//! Every class draws from its own ChaCha stream of the topology seed, so
//! the edges of one class do not depend on the probabilities of another.

use std::fmt::Write as _;
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::synapse::{EdgeWeight, Sign};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyConfig {
    pub n_input: usize,
    pub n_excitatory: usize,
    pub n_inhibitory: usize,
    pub n_output: usize,
    pub p_in: f64,
    pub p_ee: f64,
    pub p_ei: f64,
    pub p_ie: f64,
    /// Must be zero; inhibitory neurons never project onto each other.
    pub p_ii: f64,
    pub seed: u64,
    pub allow_self_loops: bool,
    /// Initial weight of the plastic E->E edges.
    pub initial_plastic_weight: f64,
    /// Upper end of the uniform (0, w_max] draw for every fixed weight.
    pub w_max: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            n_input: 100,
            n_excitatory: 160,
            n_inhibitory: 40,
            n_output: 1,
            p_in: 0.1,
            p_ee: 0.05,
            p_ei: 0.02,
            p_ie: 0.10,
            p_ii: 0.0,
            seed: 0,
            allow_self_loops: false,
            initial_plastic_weight: 1.0,
            w_max: 2.0,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_in", self.p_in),
            ("p_ee", self.p_ee),
            ("p_ei", self.p_ei),
            ("p_ie", self.p_ie),
            ("p_ii", self.p_ii),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.p_ii != 0.0 {
            return Err(Error::Config("p_ii must be 0: no inhibitory-to-inhibitory edges".into()));
        }
        if !(self.w_max > 0.0) || !(0.0..=self.w_max).contains(&self.initial_plastic_weight) {
            return Err(Error::Config(format!(
                "initial plastic weight {} outside [0, {}]",
                self.initial_plastic_weight, self.w_max
            )));
        }
        Ok(())
    }

    pub fn n_recurrent(&self) -> usize {
        self.n_excitatory + self.n_inhibitory
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeClass {
    InputToExcitatory,
    ExcitatoryToExcitatory,
    ExcitatoryToInhibitory,
    InhibitoryToExcitatory,
    ExcitatoryToOutput,
}

impl EdgeClass {
    pub const ALL: [EdgeClass; 5] = [
        EdgeClass::InputToExcitatory,
        EdgeClass::ExcitatoryToExcitatory,
        EdgeClass::ExcitatoryToInhibitory,
        EdgeClass::InhibitoryToExcitatory,
        EdgeClass::ExcitatoryToOutput,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EdgeClass::InputToExcitatory => "in_e",
            EdgeClass::ExcitatoryToExcitatory => "e_e",
            EdgeClass::ExcitatoryToInhibitory => "e_i",
            EdgeClass::InhibitoryToExcitatory => "i_e",
            EdgeClass::ExcitatoryToOutput => "e_out",
        }
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }

    fn sign(self) -> Sign {
        match self {
            EdgeClass::InhibitoryToExcitatory => Sign::Inhibitory,
            _ => Sign::Excitatory,
        }
    }
}

impl FromStr for EdgeClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        EdgeClass::ALL
            .into_iter()
            .find(|c| c.tag() == s)
            .ok_or_else(|| format!("unknown edge class {s:?}"))
    }
}

/// One directed edge. `src` and `dst` are indices within their populations
/// (input, excitatory, inhibitory or output) as given by the class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub class: EdgeClass,
    pub src: u32,
    pub dst: u32,
    pub weight: EdgeWeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub config: TopologyConfig,
    /// Edges grouped by class in `EdgeClass::ALL` order, then by source and
    /// destination.
    pub edges: Vec<Edge>,
}

impl Topology {
    pub fn class_range(&self, class: EdgeClass) -> Range<usize> {
        let start = self.edges.partition_point(|e| e.class < class);
        let end = self.edges.partition_point(|e| e.class <= class);
        start..end
    }

    pub fn edges_of(&self, class: EdgeClass) -> &[Edge] {
        &self.edges[self.class_range(class)]
    }

    pub fn count(&self, class: EdgeClass) -> usize {
        self.class_range(class).len()
    }

    fn population_sizes(&self, class: EdgeClass) -> (usize, usize) {
        let c = &self.config;
        match class {
            EdgeClass::InputToExcitatory => (c.n_input, c.n_excitatory),
            EdgeClass::ExcitatoryToExcitatory => (c.n_excitatory, c.n_excitatory),
            EdgeClass::ExcitatoryToInhibitory => (c.n_excitatory, c.n_inhibitory),
            EdgeClass::InhibitoryToExcitatory => (c.n_inhibitory, c.n_excitatory),
            EdgeClass::ExcitatoryToOutput => (c.n_excitatory, c.n_output),
        }
    }

    /// Dense crossbar: one row per recurrent neuron (E then I), one column
    /// per input neuron followed by one per recurrent neuron. Inhibitory
    /// weights are negative and absent synapses are explicit zeros.
    pub fn crossbar(&self) -> Vec<Vec<f64>> {
        let c = &self.config;
        let n_rec = c.n_recurrent();
        let mut m = vec![vec![0.0; c.n_input + n_rec]; n_rec];
        for e in &self.edges {
            let (row, col) = match e.class {
                EdgeClass::InputToExcitatory => (e.dst as usize, e.src as usize),
                EdgeClass::ExcitatoryToExcitatory => (e.dst as usize, c.n_input + e.src as usize),
                EdgeClass::ExcitatoryToInhibitory => {
                    (c.n_excitatory + e.dst as usize, c.n_input + e.src as usize)
                }
                EdgeClass::InhibitoryToExcitatory => {
                    (e.dst as usize, c.n_input + c.n_excitatory + e.src as usize)
                }
                EdgeClass::ExcitatoryToOutput => continue,
            };
            m[row][col] = e.weight.sign.factor() * e.weight.weight;
        }
        m
    }

    /// Plain-text edge list: a `#` header echoing the configuration, then
    /// `class src dst weight plastic_flag` per edge.
    pub fn to_edge_list(&self) -> String {
        let c = &self.config;
        let mut out = format!(
            "# srnn-topology seed={} n_input={} n_excitatory={} n_inhibitory={} n_output={} \
             p_in={} p_ee={} p_ei={} p_ie={} p_ii={} allow_self_loops={} initial_plastic_weight={} w_max={}\n",
            c.seed,
            c.n_input,
            c.n_excitatory,
            c.n_inhibitory,
            c.n_output,
            c.p_in,
            c.p_ee,
            c.p_ei,
            c.p_ie,
            c.p_ii,
            c.allow_self_loops,
            c.initial_plastic_weight,
            c.w_max,
        );
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                e.class.tag(),
                e.src,
                e.dst,
                e.weight.weight,
                u8::from(e.weight.plastic)
            );
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty topology file"))?;
        let config = parse_header(header)?;
        let mut edges = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(Error::parse(n, format!("expected 5 fields, found {}", f.len())));
            }
            let class: EdgeClass = f[0].parse().map_err(|m: String| Error::parse(n, m))?;
            let src = f[1].parse().map_err(|_| Error::parse(n, "bad source index"))?;
            let dst = f[2].parse().map_err(|_| Error::parse(n, "bad destination index"))?;
            let weight: f64 = f[3].parse().map_err(|_| Error::parse(n, "bad weight"))?;
            let plastic = match f[4] {
                "0" => false,
                "1" => true,
                other => return Err(Error::parse(n, format!("bad plastic flag {other:?}"))),
            };
            edges.push(Edge {
                class,
                src,
                dst,
                weight: EdgeWeight {
                    weight,
                    plastic,
                    sign: class.sign(),
                },
            });
        }
        let topology = Topology { config, edges };
        topology.check_structure()?;
        Ok(topology)
    }

    /// Class purity and index bounds; used when loading foreign edge lists.
    pub fn check_structure(&self) -> Result<()> {
        let mut last = None;
        for (i, e) in self.edges.iter().enumerate() {
            let (n_src, n_dst) = self.population_sizes(e.class);
            if e.src as usize >= n_src || e.dst as usize >= n_dst {
                return Err(Error::parse(i + 2, "edge index out of range"));
            }
            let key = (e.class, e.src, e.dst);
            if last.is_some_and(|l| l >= key) {
                return Err(Error::parse(i + 2, "edges not sorted or duplicated"));
            }
            last = Some(key);
        }
        Ok(())
    }
}

fn parse_header(line: &str) -> Result<TopologyConfig> {
    let body = line
        .strip_prefix("# srnn-topology")
        .ok_or_else(|| Error::parse(1, "missing srnn-topology header"))?;
    let mut c = TopologyConfig::default();
    for kv in body.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("malformed header field {kv:?}")))?;
        let bad = || Error::parse(1, format!("bad value for {k}: {v:?}"));
        match k {
            "seed" => c.seed = v.parse().map_err(|_| bad())?,
            "n_input" => c.n_input = v.parse().map_err(|_| bad())?,
            "n_excitatory" => c.n_excitatory = v.parse().map_err(|_| bad())?,
            "n_inhibitory" => c.n_inhibitory = v.parse().map_err(|_| bad())?,
            "n_output" => c.n_output = v.parse().map_err(|_| bad())?,
            "p_in" => c.p_in = v.parse().map_err(|_| bad())?,
            "p_ee" => c.p_ee = v.parse().map_err(|_| bad())?,
            "p_ei" => c.p_ei = v.parse().map_err(|_| bad())?,
            "p_ie" => c.p_ie = v.parse().map_err(|_| bad())?,
            "p_ii" => c.p_ii = v.parse().map_err(|_| bad())?,
            "allow_self_loops" => c.allow_self_loops = v.parse().map_err(|_| bad())?,
            "initial_plastic_weight" => c.initial_plastic_weight = v.parse().map_err(|_| bad())?,
            "w_max" => c.w_max = v.parse().map_err(|_| bad())?,
            _ => return Err(Error::parse(1, format!("unknown header field {k:?}"))),
        }
    }
    c.validate()?;
    Ok(c)
}

pub fn build_network(cfg: &TopologyConfig) -> Result<Topology> {
    cfg.validate()?;
    let mut edges = Vec::new();
    for class in EdgeClass::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(class.stream());
        let proto = Topology {
            config: *cfg,
            edges: Vec::new(),
        };
        let (n_src, n_dst) = proto.population_sizes(class);
        let same_population = class == EdgeClass::ExcitatoryToExcitatory;
        for src in 0..n_src {
            for dst in 0..n_dst {
                if same_population && src == dst && !cfg.allow_self_loops {
                    continue;
                }
                let weight = match class {
                    EdgeClass::ExcitatoryToOutput => EdgeWeight::fixed(0.0, Sign::Excitatory),
                    _ => {
                        let p = match class {
                            EdgeClass::InputToExcitatory => cfg.p_in,
                            EdgeClass::ExcitatoryToExcitatory => cfg.p_ee,
                            EdgeClass::ExcitatoryToInhibitory => cfg.p_ei,
                            _ => cfg.p_ie,
                        };
                        if rng.gen::<f64>() >= p {
                            continue;
                        }
                        if class == EdgeClass::ExcitatoryToExcitatory {
                            EdgeWeight::plastic(cfg.initial_plastic_weight)
                        } else {
                            // uniform on (0, w_max]
                            let u: f64 = rng.gen();
                            EdgeWeight::fixed(cfg.w_max * (1.0 - u), class.sign())
                        }
                    }
                };
                edges.push(Edge {
                    class,
                    src: src as u32,
                    dst: dst as u32,
                    weight,
                });
            }
        }
    }
    Ok(Topology {
        config: *cfg,
        edges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DegreeStats {
    pub min: usize,
    pub mean: f64,
    pub max: usize,
}

impl DegreeStats {
    fn of(degrees: &[usize]) -> Self {
        if degrees.is_empty() {
            return Self::default();
        }
        Self {
            min: *degrees.iter().min().unwrap(),
            mean: degrees.iter().sum::<usize>() as f64 / degrees.len() as f64,
            max: *degrees.iter().max().unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDegrees {
    pub class: EdgeClass,
    pub edges: usize,
    pub out_degree: DegreeStats,
    pub in_degree: DegreeStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeReport {
    pub classes: Vec<ClassDegrees>,
    /// Excitatory neurons with no incoming edge from inputs, E or I.
    pub isolated_excitatory: Vec<usize>,
}

pub fn degree_report(t: &Topology) -> DegreeReport {
    let mut total_in_e = vec![0usize; t.config.n_excitatory];
    let classes = EdgeClass::ALL
        .into_iter()
        .map(|class| {
            let (n_src, n_dst) = t.population_sizes(class);
            let mut out_deg = vec![0usize; n_src];
            let mut in_deg = vec![0usize; n_dst];
            for e in t.edges_of(class) {
                out_deg[e.src as usize] += 1;
                in_deg[e.dst as usize] += 1;
            }
            if matches!(
                class,
                EdgeClass::InputToExcitatory
                    | EdgeClass::ExcitatoryToExcitatory
                    | EdgeClass::InhibitoryToExcitatory
            ) {
                for (acc, d) in total_in_e.iter_mut().zip(&in_deg) {
                    *acc += d;
                }
            }
            ClassDegrees {
                class,
                edges: t.count(class),
                out_degree: DegreeStats::of(&out_deg),
                in_degree: DegreeStats::of(&in_deg),
            }
        })
        .collect();
    let isolated_excitatory = total_in_e
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| i)
        .collect();
    DegreeReport {
        classes,
        isolated_excitatory,
    }
}

impl DegreeReport {
    pub fn class(&self, class: EdgeClass) -> &ClassDegrees {
        self.classes.iter().find(|c| c.class == class).expect("all classes reported")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_complete_recurrent_classes() {
        let cfg = TopologyConfig { p_ee: 0.0, ..Default::default() };
        let t = build_network(&cfg).unwrap();
        assert_eq!(t.count(EdgeClass::ExcitatoryToExcitatory), 0);

        let cfg = TopologyConfig { p_ee: 1.0, ..Default::default() };
        let t = build_network(&cfg).unwrap();
        assert_eq!(t.count(EdgeClass::ExcitatoryToExcitatory), 160 * 159);
        assert!(t.edges_of(EdgeClass::ExcitatoryToExcitatory).iter().all(|e| e.src != e.dst));
        let r = degree_report(&t);
        let ee = r.class(EdgeClass::ExcitatoryToExcitatory);
        assert_eq!((ee.in_degree.min, ee.in_degree.max), (159, 159));
    }

    #[test]
    fn self_loops_when_allowed() {
        let cfg = TopologyConfig {
            p_ee: 1.0,
            allow_self_loops: true,
            ..Default::default()
        };
        let t = build_network(&cfg).unwrap();
        assert_eq!(t.count(EdgeClass::ExcitatoryToExcitatory), 160 * 160);
    }

    #[test]
    fn all_zero_probabilities_isolate_everything() {
        let cfg = TopologyConfig {
            p_in: 0.0,
            p_ee: 0.0,
            p_ei: 0.0,
            p_ie: 0.0,
            ..Default::default()
        };
        let r = degree_report(&build_network(&cfg).unwrap());
        assert_eq!(r.isolated_excitatory.len(), 160);
        for class in &r.classes[..4] {
            assert_eq!(class.edges, 0);
            assert_eq!(class.in_degree.max, 0);
        }
        // the readout fan-in always exists
        assert_eq!(r.class(EdgeClass::ExcitatoryToOutput).edges, 160);
    }

    #[test]
    fn weights_follow_class_rules() {
        let t = build_network(&TopologyConfig::default()).unwrap();
        for e in &t.edges {
            match e.class {
                EdgeClass::ExcitatoryToExcitatory => {
                    assert!(e.weight.plastic);
                    assert_eq!(e.weight.weight, 1.0);
                }
                EdgeClass::ExcitatoryToOutput => assert_eq!(e.weight.weight, 0.0),
                _ => {
                    assert!(!e.weight.plastic);
                    assert!(e.weight.weight > 0.0 && e.weight.weight <= 2.0);
                }
            }
            assert_eq!(
                e.weight.sign == Sign::Inhibitory,
                e.class == EdgeClass::InhibitoryToExcitatory
            );
        }
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        assert!(build_network(&TopologyConfig { p_ee: 1.5, ..Default::default() }).is_err());
        assert!(build_network(&TopologyConfig { p_in: -0.1, ..Default::default() }).is_err());
        assert!(build_network(&TopologyConfig { p_ii: 0.1, ..Default::default() }).is_err());
    }

    #[test]
    fn mean_in_degree_near_expectation() {
        let r = degree_report(&build_network(&TopologyConfig::default()).unwrap());
        let mean = r.class(EdgeClass::ExcitatoryToExcitatory).in_degree.mean;
        // 0.05 * 159 = 7.95, sd of the mean over 160 neurons ~ 0.21
        assert!((mean - 7.95).abs() < 1.0, "{mean}");
    }

    #[test]
    fn edge_list_round_trip() {
        let t = build_network(&TopologyConfig { seed: 17, ..Default::default() }).unwrap();
        let text = t.to_edge_list();
        let back = Topology::from_edge_list(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn edge_list_errors_are_located() {
        let t = build_network(&TopologyConfig { n_input: 2, n_excitatory: 3, n_inhibitory: 1, ..Default::default() })
            .unwrap();
        let mut text = t.to_edge_list();
        text.push_str("e_e 0 1 1.0 maybe\n");
        match Topology::from_edge_list(&text) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("plastic flag")),
            other => panic!("{other:?}"),
        }
        assert!(Topology::from_edge_list("e_e 0 1 1 1\n").is_err());
    }

    #[test]
    fn crossbar_has_explicit_zeros() {
        let cfg = TopologyConfig { n_input: 4, n_excitatory: 8, n_inhibitory: 2, ..Default::default() };
        let t = build_network(&cfg).unwrap();
        let m = t.crossbar();
        assert_eq!(m.len(), 10);
        assert!(m.iter().all(|row| row.len() == 14));
        let nonzero = m.iter().flatten().filter(|w| **w != 0.0).count();
        assert_eq!(nonzero, t.edges.len() - t.count(EdgeClass::ExcitatoryToOutput));
        // inhibitory rows receive no input or I columns
        for row in &m[8..] {
            assert!(row[..4].iter().all(|w| *w == 0.0));
            assert!(row[12..].iter().all(|w| *w == 0.0));
        }
    }
}
