//! Plain-text snapshot of a running network.
//!
//! The file is a sequence of sections, each opened by an `@name` line:
//!
//! ```text
//! # srnn-checkpoint
//! @config      run configuration, same syntax as a config file
//! @topology    edge list, same syntax as an exported topology
//! @neurons     v_mem v_thr v_lthr_up v_lthr_down calcium refractory_remaining
//! @currents    one synaptic current per neuron
//! @weights     one weight per topology edge, in edge order
//! @pending     neurons whose spikes await delivery, space separated
//! @rng         seed_hex stream word_pos, one line per input neuron
//! @clock       steps simulated so far
//! ```
//!
//! Floats are printed in shortest round-trip form, so a reloaded network
//! continues bit-exactly.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::config::Config;
use crate::encoding::{InputEncoder, StreamPosition};
use crate::engine::{Network, SimConfig};
use crate::error::{Error, Result};
use crate::neuron::NeuronState;
use crate::topology::Topology;

const HEADER: &str = "# srnn-checkpoint";
const SECTIONS: [&str; 8] = ["config", "topology", "neurons", "currents", "weights", "pending", "rng", "clock"];

pub fn save(network: &Network, config: &Config) -> String {
    let mut out = format!("{HEADER}\n@config\n{}", config.to_toml());
    let _ = write!(out, "@topology\n{}", network.topology().to_edge_list());
    out.push_str("@neurons\n");
    for n in &network.neurons {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            n.v_mem, n.v_thr, n.v_lthr_up, n.v_lthr_down, n.calcium, n.refractory_remaining
        );
    }
    out.push_str("@currents\n");
    for c in &network.currents {
        let _ = writeln!(out, "{c}");
    }
    out.push_str("@weights\n");
    for w in &network.weights {
        let _ = writeln!(out, "{}", w.weight);
    }
    out.push_str("@pending\n");
    let pending: Vec<String> = network.pending.iter().map(u32::to_string).collect();
    let _ = writeln!(out, "{}", pending.join(" "));
    out.push_str("@rng\n");
    for p in network.encoder.positions() {
        let hex: String = p.seed.iter().map(|b| format!("{b:02x}")).collect();
        let _ = writeln!(out, "{hex} {} {}", p.stream, p.word_pos);
    }
    let _ = writeln!(out, "@clock\n{}", network.clock);
    out
}

/// Body lines of one section with their 1-based file line numbers.
struct Section<'a> {
    lines: Vec<(usize, &'a str)>,
}

impl<'a> Section<'a> {
    fn text(&self) -> String {
        self.lines.iter().map(|(_, l)| format!("{l}\n")).collect()
    }

    fn first_line(&self) -> usize {
        self.lines.first().map_or(1, |(n, _)| *n)
    }

    fn data(&self) -> impl Iterator<Item = (usize, &'a str)> + '_ {
        self.lines.iter().copied().filter(|(_, l)| !l.trim().is_empty())
    }
}

fn split_sections(text: &str) -> Result<Vec<Section<'_>>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(Error::parse(1, "missing srnn-checkpoint header")),
    }
    let mut sections: Vec<Section> = Vec::new();
    for (n, line) in lines {
        if let Some(name) = line.strip_prefix('@') {
            let expected = SECTIONS.get(sections.len()).copied();
            if Some(name.trim()) != expected {
                return Err(Error::parse(
                    n,
                    format!("expected section @{}, found @{}", expected.unwrap_or("<end>"), name.trim()),
                ));
            }
            sections.push(Section { lines: Vec::new() });
        } else if let Some(s) = sections.last_mut() {
            s.lines.push((n, line));
        } else if !line.trim().is_empty() {
            return Err(Error::parse(n, "content before the first section"));
        }
    }
    if sections.len() != SECTIONS.len() {
        return Err(Error::parse(
            text.lines().count(),
            format!("missing section @{}", SECTIONS[sections.len()]),
        ));
    }
    Ok(sections)
}

fn floats(n: usize, line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|_| Error::parse(n, format!("bad number {v:?}"))))
        .collect()
}

fn expect_count(section: &Section, found: usize, expected: usize, what: &str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::parse(
            section.first_line(),
            format!("{found} {what} for {expected} slots"),
        ))
    }
}

pub fn load(text: &str) -> Result<(Config, Network)> {
    let s = split_sections(text)?;
    let relocate = |section: &Section, e: Error| match e {
        Error::Parse { line, message } => Error::parse(section.first_line() + line - 1, message),
        other => other,
    };
    let config = Config::from_toml_str(&s[0].text()).map_err(|e| match e {
        Error::Config(m) => Error::parse(s[0].first_line(), m),
        other => other,
    })?;
    let topology = Topology::from_edge_list(&s[1].text()).map_err(|e| relocate(&s[1], e))?;
    let sim: SimConfig = config.sim_config(0);
    let mut network = Network::new(Arc::new(topology), &sim)?;

    let mut neurons = Vec::new();
    for (n, line) in s[2].data() {
        let v = floats(n, line)?;
        if v.len() != 6 {
            return Err(Error::parse(n, format!("expected 6 neuron fields, found {}", v.len())));
        }
        neurons.push(NeuronState {
            v_mem: v[0],
            v_thr: v[1],
            v_lthr_up: v[2],
            v_lthr_down: v[3],
            calcium: v[4],
            refractory_remaining: v[5],
        });
    }
    expect_count(&s[2], neurons.len(), network.neurons.len(), "neuron states")?;
    network.neurons = neurons;

    let currents = s[3]
        .data()
        .map(|(n, l)| l.trim().parse::<f64>().map_err(|_| Error::parse(n, "bad current")))
        .collect::<Result<Vec<_>>>()?;
    expect_count(&s[3], currents.len(), network.currents.len(), "currents")?;
    network.currents = currents;

    let weights = s[4]
        .data()
        .map(|(n, l)| l.trim().parse::<f64>().map_err(|_| Error::parse(n, "bad weight")))
        .collect::<Result<Vec<_>>>()?;
    expect_count(&s[4], weights.len(), network.weights.len(), "weights")?;
    for (slot, w) in network.weights.iter_mut().zip(weights) {
        slot.weight = w;
    }

    let n_recurrent = network.neurons.len() as u32;
    let mut pending = Vec::new();
    for (n, line) in s[5].data() {
        for v in line.split_whitespace() {
            let id: u32 = v.parse().map_err(|_| Error::parse(n, format!("bad neuron index {v:?}")))?;
            if id >= n_recurrent {
                return Err(Error::parse(n, format!("neuron index {id} out of range")));
            }
            pending.push(id);
        }
    }
    network.pending = pending;

    let mut positions = Vec::new();
    for (n, line) in s[6].data() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 || f[0].len() != 64 {
            return Err(Error::parse(n, "expected `seed_hex stream word_pos`"));
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&f[0][2 * i..2 * i + 2], 16).map_err(|_| Error::parse(n, "bad seed hex"))?;
        }
        positions.push(StreamPosition {
            seed,
            stream: f[1].parse().map_err(|_| Error::parse(n, "bad stream"))?,
            word_pos: f[2].parse().map_err(|_| Error::parse(n, "bad word position"))?,
        });
    }
    expect_count(&s[6], positions.len(), network.encoder.n_input(), "rng streams")?;
    network.encoder = InputEncoder::from_positions(&positions);

    let mut clock = s[7].data();
    let (n, line) = clock.next().ok_or_else(|| Error::parse(s[7].first_line(), "missing clock"))?;
    network.clock = line.trim().parse().map_err(|_| Error::parse(n, "bad clock"))?;
    Ok((config, network))
}
