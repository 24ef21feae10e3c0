//! Stable text formats: PGSolver-compatible parity game files, JSON strategy
//! and trace files, and line-oriented payoff game files with exact rationals
//! written as `numerator/denominator`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::counterlab::classify_phase;
use crate::families::RoleMap;
use crate::game::{GameError, Node, NodeId, ParityGame, Player, Strategy};
use crate::payoff::{
    DiscountedPayoffGame, MeanPayoffGame, Rational, SimpleStochasticGame, SsgNodeKind,
};
use crate::solver::TraceStep;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {detail}")]
    Line { line: usize, detail: String },
    #[error("node ids are not dense: id {id} is missing")]
    MissingId { id: NodeId },
    #[error("node {id} is defined twice")]
    DuplicateId { id: NodeId },
    #[error("no node lines found")]
    NoNodes,
    #[error("invalid game structure: {0}")]
    Game(#[from] GameError),
    #[error("invalid json: {0}")]
    Json(String),
    #[error("invalid strategy: {0}")]
    Strategy(String),
    #[error("invalid trace: {0}")]
    Trace(String),
}

/// Parses a parity game in PGSolver text form: an optional header
/// `parity <max-id>;` followed by node lines
/// `<id> <priority> <owner> <succ>[,<succ>...] ["<label>"];`.
/// The header value and trailing semicolons are advisory; labels are
/// optional. Ids must be dense and the parsed game must pass structural
/// validation.
pub fn parse_game(text: &str) -> Result<ParityGame, FormatError> {
    let mut nodes: BTreeMap<NodeId, Node> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut body = raw.trim();
        if body.is_empty() {
            continue;
        }
        body = body.strip_suffix(';').unwrap_or(body).trim_end();
        if body.split_whitespace().next() == Some("parity") {
            continue;
        }
        let (head, label) = match body.find('"') {
            Some(open) => {
                let close = body.rfind('"').expect("found an opening quote");
                if close <= open {
                    return Err(FormatError::Line {
                        line,
                        detail: "unterminated label quote".to_string(),
                    });
                }
                (&body[..open], Some(body[open + 1..close].to_string()))
            }
            None => (body, None),
        };
        let fields: Vec<&str> = head.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(FormatError::Line {
                line,
                detail: format!(
                    "expected id, priority, owner and successors, got {} fields",
                    fields.len()
                ),
            });
        }
        let id: NodeId = fields[0].parse().map_err(|_| FormatError::Line {
            line,
            detail: format!("bad node id '{}'", fields[0]),
        })?;
        let priority: u32 = fields[1].parse().map_err(|_| FormatError::Line {
            line,
            detail: format!("bad priority '{}'", fields[1]),
        })?;
        let owner = match fields[2] {
            "0" => Player::P0,
            "1" => Player::P1,
            other => {
                return Err(FormatError::Line {
                    line,
                    detail: format!("bad owner '{other}' (expected 0 or 1)"),
                })
            }
        };
        let mut successors = Vec::new();
        for part in fields[3].split(',') {
            let u: NodeId = part.trim().parse().map_err(|_| FormatError::Line {
                line,
                detail: format!("bad successor '{part}'"),
            })?;
            successors.push(u);
        }
        if nodes
            .insert(
                id,
                Node {
                    owner,
                    priority,
                    successors,
                    label,
                },
            )
            .is_some()
        {
            return Err(FormatError::DuplicateId { id });
        }
    }
    if nodes.is_empty() {
        return Err(FormatError::NoNodes);
    }
    let max = *nodes.keys().next_back().expect("nonempty");
    for id in 0..=max {
        if !nodes.contains_key(&id) {
            return Err(FormatError::MissingId { id });
        }
    }
    let game = ParityGame::new(nodes.into_values().collect());
    game.validate()?;
    Ok(game)
}

/// Writes a parity game in PGSolver text form, always with header and
/// labels; unlabeled nodes get their id as label. Writing, parsing and
/// writing again reproduces the bytes exactly.
pub fn write_game(g: &ParityGame) -> String {
    let mut out = String::new();
    writeln!(out, "parity {};", g.node_count() - 1).unwrap();
    for v in g.nodes() {
        let succs = g
            .successors(v)
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let label = match g.label(v) {
            Some(l) => l.to_string(),
            None => v.to_string(),
        };
        writeln!(out, "{v} {} {} {succs} \"{label}\";", g.priority(v), g.owner(v)).unwrap();
    }
    out
}

fn strategy_from_pairs(
    g: &ParityGame,
    pairs: &[(NodeId, NodeId)],
) -> Result<Strategy, FormatError> {
    let mut player: Option<Player> = None;
    for &(v, _) in pairs {
        if v >= g.node_count() {
            return Err(FormatError::Strategy(format!("node {v} out of range")));
        }
        match player {
            None => player = Some(g.owner(v)),
            Some(p) if p == g.owner(v) => {}
            Some(p) => {
                return Err(FormatError::Strategy(format!(
                    "entries mix players: node {v} is not owned by player {p}"
                )))
            }
        }
    }
    // An empty file can only be the strategy of a player owning no nodes;
    // default to player 0, the usual subject of strategy files.
    let player = player.unwrap_or(Player::P0);
    let mut s = Strategy::empty(g.node_count(), player);
    for &(v, u) in pairs {
        if u >= g.node_count() {
            return Err(FormatError::Strategy(format!(
                "choice {u} at node {v} out of range"
            )));
        }
        s.set(v, u);
    }
    s.validate(g)?;
    Ok(s)
}

/// Parses a strategy file: a JSON object mapping node-id strings to node-id
/// numbers. The owning player is inferred from the game; the strategy must
/// cover exactly the owned nodes with edge choices.
pub fn parse_strategy(text: &str, g: &ParityGame) -> Result<Strategy, FormatError> {
    let map: BTreeMap<String, u64> =
        serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
    let mut pairs = Vec::with_capacity(map.len());
    for (k, &u) in &map {
        let v: NodeId = k
            .parse()
            .map_err(|_| FormatError::Strategy(format!("bad node id key '{k}'")))?;
        pairs.push((v, u as NodeId));
    }
    strategy_from_pairs(g, &pairs)
}

/// Writes a strategy as a single-line JSON object with numerically ordered
/// keys.
pub fn write_strategy(s: &Strategy) -> String {
    let entries: Vec<String> = s
        .choices()
        .map(|(v, u)| format!("\"{v}\": {u}"))
        .collect();
    format!("{{{}}}\n", entries.join(", "))
}

fn strategy_value(s: &Strategy) -> Value {
    let mut obj = Map::new();
    for (v, u) in s.choices() {
        obj.insert(v.to_string(), json!(u));
    }
    Value::Object(obj)
}

/// Writes an improvement trace as a pretty-printed JSON array. Each step
/// carries the iteration number, the strategy and the improving switches;
/// when the game is a known family instance the counter phase and bit string
/// are included, and steps retaining full valuations serialize them as
/// `[cycle, [path...], length]` triples indexed by node.
pub fn write_trace(steps: &[TraceStep], map: Option<&RoleMap>) -> String {
    let arr: Vec<Value> = steps
        .iter()
        .map(|step| {
            let mut obj = Map::new();
            obj.insert("iteration".to_string(), json!(step.iteration));
            obj.insert("sigma".to_string(), strategy_value(&step.sigma));
            obj.insert(
                "improving_switches".to_string(),
                json!(step
                    .improving_switches
                    .iter()
                    .map(|&(v, u)| json!([v, u]))
                    .collect::<Vec<_>>()),
            );
            if let Some(map) = map {
                let report = classify_phase(map, &step.sigma);
                obj.insert("phase".to_string(), json!(report.phase.to_string()));
                obj.insert("b_bits".to_string(), json!(report.b.to_string()));
            }
            if let Some(vals) = &step.valuation {
                let triples: Vec<Value> = (0..vals.node_count())
                    .map(|v| {
                        let nv = vals.get(v);
                        json!([nv.cycle, nv.path.iter().collect::<Vec<_>>(), nv.length])
                    })
                    .collect();
                obj.insert("valuations".to_string(), json!(triples));
            }
            Value::Object(obj)
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&Value::Array(arr)).unwrap();
    out.push('\n');
    out
}

/// Extracts the strategy sequence from a trace file; all other fields are
/// ignored.
pub fn parse_trace(text: &str, g: &ParityGame) -> Result<Vec<Strategy>, FormatError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
    let steps = value
        .as_array()
        .ok_or_else(|| FormatError::Trace("top level is not an array".to_string()))?;
    let mut out = Vec::with_capacity(steps.len());
    for (i, step) in steps.iter().enumerate() {
        let sigma = step
            .get("sigma")
            .and_then(Value::as_object)
            .ok_or_else(|| FormatError::Trace(format!("step {i} has no sigma object")))?;
        let mut pairs = Vec::with_capacity(sigma.len());
        for (k, u) in sigma {
            let v: NodeId = k
                .parse()
                .map_err(|_| FormatError::Trace(format!("step {i}: bad node id key '{k}'")))?;
            let u = u
                .as_u64()
                .ok_or_else(|| FormatError::Trace(format!("step {i}: bad choice at '{k}'")))?;
            pairs.push((v, u as NodeId));
        }
        out.push(strategy_from_pairs(g, &pairs)?);
    }
    Ok(out)
}

/// Exact rational with an explicit denominator, also for integers.
pub fn rational_text(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn owner_digit(p: Player) -> u8 {
    match p {
        Player::P0 => 0,
        Player::P1 => 1,
    }
}

fn joined_ids(ids: &[NodeId]) -> String {
    ids.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes a mean payoff game: header `meanpayoff <max-id>;`, then per node
/// `<id> <owner> <reward> <succ>[,<succ>...];`.
pub fn write_mpg(m: &MeanPayoffGame) -> String {
    let mut out = String::new();
    writeln!(out, "meanpayoff {};", m.node_count() - 1).unwrap();
    for v in 0..m.node_count() {
        writeln!(
            out,
            "{v} {} {} {};",
            owner_digit(m.owners[v]),
            m.rewards[v],
            joined_ids(&m.successors[v])
        )
        .unwrap();
    }
    out
}

/// Writes a discounted payoff game: header
/// `discountedpayoff <max-id> <beta num/den>;`, then the mean payoff node
/// lines.
pub fn write_dpg(d: &DiscountedPayoffGame) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "discountedpayoff {} {};",
        d.mpg.node_count() - 1,
        rational_text(&d.beta)
    )
    .unwrap();
    for v in 0..d.mpg.node_count() {
        writeln!(
            out,
            "{v} {} {} {};",
            owner_digit(d.mpg.owners[v]),
            d.mpg.rewards[v],
            joined_ids(&d.mpg.successors[v])
        )
        .unwrap();
    }
    out
}

/// Writes a simple stochastic game: header `stochastic <max-id>;`, then per
/// node either `<id> max|min <succ>[,<succ>...];`, an average line
/// `<id> avg <succ>:<num/den>[,<succ>:<num/den>...];` or a sink line
/// `<id> sink0|sink1;`.
pub fn write_ssg(s: &SimpleStochasticGame) -> String {
    let mut out = String::new();
    writeln!(out, "stochastic {};", s.node_count() - 1).unwrap();
    for v in 0..s.node_count() {
        match s.kinds[v] {
            SsgNodeKind::Max => {
                writeln!(out, "{v} max {};", joined_ids(&s.successors[v])).unwrap()
            }
            SsgNodeKind::Min => {
                writeln!(out, "{v} min {};", joined_ids(&s.successors[v])).unwrap()
            }
            SsgNodeKind::Avg => {
                let pairs = s.successors[v]
                    .iter()
                    .zip(&s.probs[v])
                    .map(|(u, p)| format!("{u}:{}", rational_text(p)))
                    .collect::<Vec<_>>()
                    .join(",");
                writeln!(out, "{v} avg {pairs};").unwrap()
            }
            SsgNodeKind::Sink0 => writeln!(out, "{v} sink0;").unwrap(),
            SsgNodeKind::Sink1 => writeln!(out, "{v} sink1;").unwrap(),
        }
    }
    out
}
