//! Parametric generators for the benchmark families, emitting text in the
//! parser's input grammar. Output is deterministic in (family, params,
//! seed); header comments record the concrete encoding choices.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Wumpus,
    WumpusDeadend,
    WumpusRestart,
    Doors,
    Unix,
    Localize,
    ColorBalls,
    RockSample,
    MasterMind,
    Diseases,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        Some(match s {
            "wumpus" => Family::Wumpus,
            "wumpus-deadend" => Family::WumpusDeadend,
            "wumpus-restart" => Family::WumpusRestart,
            "doors" => Family::Doors,
            "unix" => Family::Unix,
            "localize" => Family::Localize,
            "colorballs" => Family::ColorBalls,
            "rocksample" => Family::RockSample,
            "mastermind" => Family::MasterMind,
            "diseases" => Family::Diseases,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Wumpus => "wumpus",
            Family::WumpusDeadend => "wumpus-deadend",
            Family::WumpusRestart => "wumpus-restart",
            Family::Doors => "doors",
            Family::Unix => "unix",
            Family::Localize => "localize",
            Family::ColorBalls => "colorballs",
            Family::RockSample => "rocksample",
            Family::MasterMind => "mastermind",
            Family::Diseases => "diseases",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub family: Family,
    pub params: Vec<u32>,
    pub seed: u64,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid parameters for {family}: {msg}")]
    InvalidParams { family: &'static str, msg: String },
}

fn invalid(family: &'static str, msg: impl Into<String>) -> GenError {
    GenError::InvalidParams {
        family,
        msg: msg.into(),
    }
}

/// Generate the (domain_text, problem_text) pair for a benchmark instance.
pub fn generate(spec: &DomainSpec) -> Result<(String, String), GenError> {
    match spec.family {
        Family::Diseases => diseases(spec),
        Family::Wumpus => wumpus(spec, WumpusVariant::Safe),
        Family::WumpusDeadend => wumpus(spec, WumpusVariant::Deadend),
        Family::WumpusRestart => wumpus(spec, WumpusVariant::Restart),
        Family::Doors => doors(spec),
        Family::Unix => unix(spec),
        Family::Localize => localize(spec),
        Family::ColorBalls => colorballs(spec),
        Family::RockSample => rocksample(spec),
        Family::MasterMind => mastermind(spec),
    }
}

pub fn instance_name(spec: &DomainSpec) -> String {
    let mut s = spec.family.name().to_string();
    for p in &spec.params {
        s.push('-');
        s.push_str(&p.to_string());
    }
    s
}

fn header(spec: &DomainSpec, encoding: &str) -> String {
    format!(
        "; family: {}\n; params: {}\n; seed: {}\n; encoding: {}\n",
        spec.family.name(),
        spec.params
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(" "),
        spec.seed,
        encoding
    )
}

fn one_param(spec: &DomainSpec, family: &'static str, min: u32, max: u32) -> Result<u32, GenError> {
    match spec.params.as_slice() {
        [n] if (min..=max).contains(n) => Ok(*n),
        [n] => Err(invalid(family, format!("n={n} outside {min}..{max}"))),
        other => Err(invalid(
            family,
            format!("expected 1 parameter, got {}", other.len()),
        )),
    }
}

fn two_params(
    spec: &DomainSpec,
    family: &'static str,
    r1: (u32, u32),
    r2: (u32, u32),
) -> Result<(u32, u32), GenError> {
    match spec.params.as_slice() {
        [a, b] if (r1.0..=r1.1).contains(a) && (r2.0..=r2.1).contains(b) => Ok((*a, *b)),
        [a, b] => Err(invalid(
            family,
            format!("({a}, {b}) outside {}..{} x {}..{}", r1.0, r1.1, r2.0, r2.1),
        )),
        other => Err(invalid(
            family,
            format!("expected 2 parameters, got {}", other.len()),
        )),
    }
}

// ---------------------------------------------------------------------------
// diseases

fn diseases(spec: &DomainSpec) -> Result<(String, String), GenError> {
    let n = one_param(spec, "diseases", 1, 64)?;
    let hdr = header(
        spec,
        "oneof over n diseases; test sets/resets test-passed; treat requires the disease",
    );
    let mut d = hdr.clone();
    d.push_str(
        "(define (domain diseases)
  (:types disease)
  (:predicates (infected ?d - disease) (test-passed))
  (:action test
    :parameters (?d - disease)
    :precondition (and)
    :effect (and (when (and (infected ?d)) (test-passed))
                 (when (and (not (infected ?d))) (not (test-passed)))))
  (:action treat
    :parameters (?d - disease)
    :precondition (and (infected ?d))
    :effect (and (not (infected ?d))))
  (:action observe-test-result
    :parameters ()
    :precondition (and)
    :effect (and)
    :observe (test-passed)))
",
    );
    let mut p = hdr;
    p.push_str(&format!(
        "(define (problem diseases-{n})\n  (:domain diseases)\n  (:objects"
    ));
    for i in 1..=n {
        p.push_str(&format!(" d{i}"));
    }
    p.push_str(" - disease)\n  (:init (and (oneof");
    for i in 1..=n {
        p.push_str(&format!(" (infected d{i})"));
    }
    p.push_str(") (not (test-passed))))\n  (:goal (and");
    for i in 1..=n {
        p.push_str(&format!(" (not (infected d{i}))"));
    }
    p.push_str(")))\n");
    Ok((d, p))
}

// ---------------------------------------------------------------------------
// wumpus and variants

#[derive(Clone, Copy, PartialEq)]
enum WumpusVariant {
    Safe,
    Deadend,
    Restart,
}

fn neighbors(x: u32, y: u32, n: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    if x > 1 {
        out.push((x - 1, y));
    }
    if x < n {
        out.push((x + 1, y));
    }
    if y > 1 {
        out.push((x, y - 1));
    }
    if y < n {
        out.push((x, y + 1));
    }
    out
}

fn wumpus(spec: &DomainSpec, variant: WumpusVariant) -> Result<(String, String), GenError> {
    let family = match variant {
        WumpusVariant::Safe => "wumpus",
        WumpusVariant::Deadend => "wumpus-deadend",
        WumpusVariant::Restart => "wumpus-restart",
    };
    let n = one_param(spec, family, 4, 24)?;
    let enc = match variant {
        WumpusVariant::Safe => {
            "one wumpus per pair of squares beside the two top diagonal cells; \
             move requires the target safe; stench in the 4-neighborhood"
        }
        WumpusVariant::Deadend => {
            "no safety precondition; entering a wumpus square kills (clears alive); \
             every action requires alive"
        }
        WumpusVariant::Restart => {
            "no safety precondition; entering a wumpus square bounces the agent \
             back to 1-1 and raises the bumped flag (sensed by check-bump)"
        }
    };
    let hdr = header(spec, enc);

    // The two oneof pairs sit beside the diagonal cells (n-1,n-1) and (n,n).
    let pairs: [[(u32, u32); 2]; 2] = [[(n - 2, n - 1), (n - 1, n - 2)], [(n - 1, n), (n, n - 1)]];
    let candidates: Vec<(u32, u32)> = pairs.iter().flatten().copied().collect();
    let is_candidate = |x: u32, y: u32| candidates.contains(&(x, y));

    let mut d = hdr.clone();
    d.push_str(&format!("(define (domain {family})\n  (:predicates\n"));
    for x in 1..=n {
        for y in 1..=n {
            d.push_str(&format!("    (at-{x}-{y})\n"));
        }
    }
    for (x, y) in &candidates {
        d.push_str(&format!("    (wumpus-at-{x}-{y})\n"));
    }
    for x in 1..=n {
        for y in 1..=n {
            d.push_str(&format!("    (stench-at-{x}-{y})\n"));
        }
    }
    match variant {
        WumpusVariant::Deadend => d.push_str("    (alive)\n"),
        WumpusVariant::Restart => d.push_str("    (bumped)\n"),
        WumpusVariant::Safe => {}
    }
    d.push_str("  )\n");

    for x1 in 1..=n {
        for y1 in 1..=n {
            for (x2, y2) in neighbors(x1, y1, n) {
                d.push_str(&format!(
                    "  (:action move-from-{x1}-{y1}-to-{x2}-{y2}\n    :parameters ()\n    :precondition (and (at-{x1}-{y1})"
                ));
                match variant {
                    WumpusVariant::Safe => {
                        if is_candidate(x2, y2) {
                            d.push_str(&format!(" (not (wumpus-at-{x2}-{y2}))"));
                        }
                    }
                    WumpusVariant::Deadend => d.push_str(" (alive)"),
                    WumpusVariant::Restart => {}
                }
                d.push_str(")\n    :effect (and");
                match variant {
                    WumpusVariant::Restart if is_candidate(x2, y2) => {
                        let w = format!("wumpus-at-{x2}-{y2}");
                        d.push_str(&format!(
                            " (when (and (not ({w}))) (at-{x2}-{y2}))
                 (when (and (not ({w}))) (not (at-{x1}-{y1})))
                 (when (and (not ({w}))) (not (bumped)))
                 (when (and ({w})) (at-1-1))
                 (when (and ({w})) (bumped))"
                        ));
                        if (x1, y1) != (1, 1) {
                            d.push_str(&format!(" (when (and ({w})) (not (at-{x1}-{y1})))"));
                        }
                    }
                    _ => {
                        d.push_str(&format!(" (at-{x2}-{y2}) (not (at-{x1}-{y1}))"));
                        if variant == WumpusVariant::Restart {
                            d.push_str(" (not (bumped))");
                        }
                        if variant == WumpusVariant::Deadend && is_candidate(x2, y2) {
                            d.push_str(&format!(
                                " (when (and (wumpus-at-{x2}-{y2})) (not (alive)))"
                            ));
                        }
                    }
                }
                d.push_str("))\n");
            }
        }
    }
    for x in 1..=n {
        for y in 1..=n {
            d.push_str(&format!(
                "  (:action smell-stench-at-{x}-{y}\n    :parameters ()\n    :precondition (and (at-{x}-{y})"
            ));
            if variant == WumpusVariant::Deadend {
                d.push_str(" (alive)");
            }
            d.push_str(&format!(
                ")\n    :effect (and)\n    :observe (stench-at-{x}-{y}))\n"
            ));
        }
    }
    if variant == WumpusVariant::Restart {
        d.push_str(
            "  (:action check-bump\n    :parameters ()\n    :precondition (and)\n    :effect (and)\n    :observe (bumped))\n",
        );
    }
    d.push_str(")\n");

    let mut p = hdr;
    p.push_str(&format!(
        "(define (problem {family}-{n})\n  (:domain {family})\n  (:objects)\n  (:init (and\n    (at-1-1)\n"
    ));
    for x in 1..=n {
        for y in 1..=n {
            if (x, y) != (1, 1) {
                p.push_str(&format!("    (not (at-{x}-{y}))\n"));
            }
        }
    }
    for pair in &pairs {
        p.push_str(&format!(
            "    (oneof (wumpus-at-{}-{}) (wumpus-at-{}-{}))\n",
            pair[0].0, pair[0].1, pair[1].0, pair[1].1
        ));
    }
    // Stench holds exactly where a candidate wumpus is adjacent.
    for x in 1..=n {
        for y in 1..=n {
            let adj: Vec<(u32, u32)> = neighbors(x, y, n)
                .into_iter()
                .filter(|&(a, b)| is_candidate(a, b))
                .collect();
            if adj.is_empty() {
                p.push_str(&format!("    (not (stench-at-{x}-{y}))\n"));
            } else {
                p.push_str(&format!("    (or (not (stench-at-{x}-{y}))"));
                for (a, b) in &adj {
                    p.push_str(&format!(" (wumpus-at-{a}-{b})"));
                }
                p.push_str(")\n");
                for (a, b) in &adj {
                    p.push_str(&format!(
                        "    (or (not (wumpus-at-{a}-{b})) (stench-at-{x}-{y}))\n"
                    ));
                }
            }
        }
    }
    match variant {
        WumpusVariant::Deadend => p.push_str("    (alive)\n"),
        WumpusVariant::Restart => p.push_str("    (not (bumped))\n"),
        WumpusVariant::Safe => {}
    }
    p.push_str(&format!("  ))\n  (:goal (and (at-{n}-{n}))))\n"));
    Ok((d, p))
}

// ---------------------------------------------------------------------------
// doors

fn doors(spec: &DomainSpec) -> Result<(String, String), GenError> {
    let n = one_param(spec, "doors", 3, 25)?;
    if n.is_multiple_of(2) {
        return Err(invalid("doors", format!("n={n} must be odd")));
    }
    let hdr = header(
        spec,
        "n-by-n grid; every even column is a wall with one door at an unknown row (oneof); \
         try-door senses from the cell left of the wall",
    );
    let mid = n.div_ceil(2);
    let is_wall = |x: u32| x.is_multiple_of(2);

    let mut d = hdr.clone();
    d.push_str("(define (domain doors)\n  (:predicates\n");
    for x in 1..=n {
        for y in 1..=n {
            d.push_str(&format!("    (at-{x}-{y})\n"));
        }
    }
    for x in 1..=n {
        if is_wall(x) {
            for y in 1..=n {
                d.push_str(&format!("    (door-{x}-{y})\n"));
            }
        }
    }
    d.push_str("  )\n");
    let emit_move = |d: &mut String, x1: u32, y1: u32, x2: u32, y2: u32| {
        d.push_str(&format!(
            "  (:action move-from-{x1}-{y1}-to-{x2}-{y2}\n    :parameters ()\n    :precondition (and (at-{x1}-{y1})"
        ));
        if is_wall(x2) {
            d.push_str(&format!(" (door-{x2}-{y2})"));
        }
        d.push_str(&format!(
            ")\n    :effect (and (at-{x2}-{y2}) (not (at-{x1}-{y1}))))\n"
        ));
    };
    for x in 1..=n {
        for y in 1..=n {
            if is_wall(x) {
                // Inside a wall cell only horizontal exits are possible.
                emit_move(&mut d, x, y, x - 1, y);
                if x < n {
                    emit_move(&mut d, x, y, x + 1, y);
                }
            } else {
                if y > 1 {
                    emit_move(&mut d, x, y, x, y - 1);
                }
                if y < n {
                    emit_move(&mut d, x, y, x, y + 1);
                }
                if x > 1 {
                    emit_move(&mut d, x, y, x - 1, y);
                }
                if x < n {
                    emit_move(&mut d, x, y, x + 1, y);
                }
            }
        }
    }
    for x in 1..=n {
        if is_wall(x) {
            for y in 1..=n {
                d.push_str(&format!(
                    "  (:action try-door-{x}-{y}\n    :parameters ()\n    :precondition (and (at-{}-{y}))\n    :effect (and)\n    :observe (door-{x}-{y}))\n",
                    x - 1
                ));
            }
        }
    }
    d.push_str(")\n");

    let mut p = hdr;
    p.push_str(&format!(
        "(define (problem doors-{n})\n  (:domain doors)\n  (:objects)\n  (:init (and\n    (at-1-{mid})\n"
    ));
    for x in 1..=n {
        for y in 1..=n {
            if (x, y) != (1, mid) {
                p.push_str(&format!("    (not (at-{x}-{y}))\n"));
            }
        }
    }
    for x in 1..=n {
        if is_wall(x) {
            p.push_str("    (oneof");
            for y in 1..=n {
                p.push_str(&format!(" (door-{x}-{y})"));
            }
            p.push_str(")\n");
        }
    }
    p.push_str(&format!("  ))\n  (:goal (and (at-{n}-{mid}))))\n"));
    Ok((d, p))
}

// ---------------------------------------------------------------------------
// unix

fn unix(spec: &DomainSpec) -> Result<(String, String), GenError> {
    let depth = one_param(spec, "unix", 1, 10)?;
    let hdr = header(
        spec,
        "complete binary directory tree (heap numbering); the file sits at one leaf (oneof); \
         check-file senses the current directory; carry it to the root",
    );
    let total = (1u32 << (depth + 1)) - 1;
    let first_leaf = 1u32 << depth;

    let mut d = hdr.clone();
    d.push_str("(define (domain unix)\n  (:predicates\n");
    for i in 1..=total {
        d.push_str(&format!("    (at-dir-{i})\n    (file-in-{i})\n"));
    }
    d.push_str("    (holding)\n  )\n");
    for i in 1..=total {
        for child in [2 * i, 2 * i + 1] {
            if child <= total {
                d.push_str(&format!(
                    "  (:action cd-{i}-{child}\n    :parameters ()\n    :precondition (and (at-dir-{i}))\n    :effect (and (at-dir-{child}) (not (at-dir-{i}))))\n"
                ));
                d.push_str(&format!(
                    "  (:action cd-{child}-{i}\n    :parameters ()\n    :precondition (and (at-dir-{child}))\n    :effect (and (at-dir-{i}) (not (at-dir-{child}))))\n"
                ));
            }
        }
    }
    for i in 1..=total {
        d.push_str(&format!(
            "  (:action check-file-{i}\n    :parameters ()\n    :precondition (and (at-dir-{i}))\n    :effect (and)\n    :observe (file-in-{i}))\n"
        ));
        d.push_str(&format!(
            "  (:action pick-{i}\n    :parameters ()\n    :precondition (and (at-dir-{i}) (file-in-{i}))\n    :effect (and (holding) (not (file-in-{i}))))\n"
        ));
    }
    d.push_str(
        "  (:action drop-at-root\n    :parameters ()\n    :precondition (and (at-dir-1) (holding))\n    :effect (and (file-in-1) (not (holding))))\n",
    );
    d.push_str(")\n");

    let mut p = hdr;
    p.push_str(&format!(
        "(define (problem unix-{depth})\n  (:domain unix)\n  (:objects)\n  (:init (and\n    (at-dir-1)\n    (not (holding))\n"
    ));
    for i in 2..=total {
        p.push_str(&format!("    (not (at-dir-{i}))\n"));
    }
    for i in 1..first_leaf {
        p.push_str(&format!("    (not (file-in-{i}))\n"));
    }
    p.push_str("    (oneof");
    for i in first_leaf..=total {
        p.push_str(&format!(" (file-in-{i})"));
    }
    p.push_str(")\n  ))\n  (:goal (and (file-in-1))))\n");
    Ok((d, p))
}

// ---------------------------------------------------------------------------
// localize

fn localize(spec: &DomainSpec) -> Result<(String, String), GenError> {
    let n = one_param(spec, "localize", 2, 16)?;
    let hdr = header(
        spec,
        "known empty n-by-n map, unknown start cell (oneof); moves bump at walls; \
         four sensors latch whether a wall is adjacent in each direction",
    );
    let mut d = hdr.clone();
    d.push_str("(define (domain localize)\n  (:predicates\n");
    for x in 1..=n {
        for y in 1..=n {
            d.push_str(&format!("    (at-{x}-{y})\n"));
        }
    }
    d.push_str("    (wall-north)\n    (wall-south)\n    (wall-east)\n    (wall-west)\n  )\n");

    // dx, dy and the guard literal preventing add/delete overlap.
    let dirs: [(&str, i32, i32); 4] = [
        ("north", 0, 1),
        ("south", 0, -1),
        ("east", 1, 0),
        ("west", -1, 0),
    ];
    for (dir, dx, dy) in dirs {
        d.push_str(&format!(
            "  (:action move-{dir}\n    :parameters ()\n    :precondition (and)\n    :effect (and"
        ));
        for x in 1..=n as i32 {
            for y in 1..=n as i32 {
                let (tx, ty) = (x + dx, y + dy);
                if (1..=n as i32).contains(&tx) && (1..=n as i32).contains(&ty) {
                    d.push_str(&format!(" (when (and (at-{x}-{y})) (at-{tx}-{ty}))"));
                    // Leaving (x,y): guarded so the cell behind us, which
                    // moves into (x,y), does not clash.
                    let (px, py) = (x - dx, y - dy);
                    if (1..=n as i32).contains(&px) && (1..=n as i32).contains(&py) {
                        d.push_str(&format!(
                            " (when (and (at-{x}-{y}) (not (at-{px}-{py}))) (not (at-{x}-{y})))"
                        ));
                    } else {
                        d.push_str(&format!(" (when (and (at-{x}-{y})) (not (at-{x}-{y})))"));
                    }
                }
            }
        }
        d.push_str("))\n");
    }
    for (dir, dx, dy) in dirs {
        let wall_cells: Vec<(i32, i32)> = (1..=n as i32)
            .flat_map(|x| (1..=n as i32).map(move |y| (x, y)))
            .filter(|&(x, y)| {
                let (tx, ty) = (x + dx, y + dy);
                !(1..=n as i32).contains(&tx) || !(1..=n as i32).contains(&ty)
            })
            .collect();
        d.push_str(&format!(
            "  (:action sense-wall-{dir}\n    :parameters ()\n    :precondition (and)\n    :effect (and"
        ));
        for (x, y) in &wall_cells {
            d.push_str(&format!(" (when (and (at-{x}-{y})) (wall-{dir}))"));
        }
        d.push_str(" (when (and");
        for (x, y) in &wall_cells {
            d.push_str(&format!(" (not (at-{x}-{y}))"));
        }
        d.push_str(&format!(
            ") (not (wall-{dir}))))\n    :observe (wall-{dir}))\n"
        ));
    }
    d.push_str(")\n");

    let mut p = hdr;
    p.push_str(&format!(
        "(define (problem localize-{n})\n  (:domain localize)\n  (:objects)\n  (:init (and\n    (oneof"
    ));
    for x in 1..=n {
        for y in 1..=n {
            p.push_str(&format!(" (at-{x}-{y})"));
        }
    }
    p.push_str(
        ")\n    (not (wall-north))\n    (not (wall-south))\n    (not (wall-east))\n    (not (wall-west))\n",
    );
    p.push_str(&format!("  ))\n  (:goal (and (at-{n}-{n}))))\n"));
    Ok((d, p))
}

// ---------------------------------------------------------------------------
// colorballs

fn colorballs(spec: &DomainSpec) -> Result<(String, String), GenError> {
    let (n, balls) = two_params(spec, "colorballs", (2, 12), (1, 8))?;
    let hdr = header(
        spec,
        "n-by-n grid, one oneof per ball over (cell x color); sensing is per cell and color; \
         red bin at 1-1, blue bin at n-n",
    );
    let colors = ["red", "blue"];
    let bin = |c: &str| if c == "red" { (1, 1) } else { (n, n) };

    let mut d = hdr.clone();
    d.push_str("(define (domain colorballs)\n  (:predicates\n");
    for x in 1..=n {
        for y in 1..=n {
            d.push_str(&format!("    (at-{x}-{y})\n"));
        }
    }
    for b in 1..=balls {
        for x in 1..=n {
            for y in 1..=n {
                for c in colors {
                    d.push_str(&format!("    (ball{b}-{x}-{y}-{c})\n"));
                }
            }
        }
        for c in colors {
            d.push_str(&format!("    (holding{b}-{c})\n"));
        }
        d.push_str(&format!("    (done{b})\n"));
    }
    d.push_str("  )\n");
    for x in 1..=n {
        for y in 1..=n {
            for (tx, ty) in neighbors(x, y, n) {
                d.push_str(&format!(
                    "  (:action move-from-{x}-{y}-to-{tx}-{ty}\n    :parameters ()\n    :precondition (and (at-{x}-{y}))\n    :effect (and (at-{tx}-{ty}) (not (at-{x}-{y}))))\n"
                ));
            }
        }
    }
    for b in 1..=balls {
        for x in 1..=n {
            for y in 1..=n {
                for c in colors {
                    d.push_str(&format!(
                        "  (:action sense-ball{b}-{x}-{y}-{c}\n    :parameters ()\n    :precondition (and (at-{x}-{y}))\n    :effect (and)\n    :observe (ball{b}-{x}-{y}-{c}))\n"
                    ));
                    d.push_str(&format!(
                        "  (:action pick-ball{b}-{x}-{y}-{c}\n    :parameters ()\n    :precondition (and (at-{x}-{y}) (ball{b}-{x}-{y}-{c}))\n    :effect (and (holding{b}-{c}) (not (ball{b}-{x}-{y}-{c}))))\n"
                    ));
                }
            }
        }
        for c in colors {
            let (bx, by) = bin(c);
            d.push_str(&format!(
                "  (:action drop-ball{b}-{c}\n    :parameters ()\n    :precondition (and (at-{bx}-{by}) (holding{b}-{c}))\n    :effect (and (done{b}) (not (holding{b}-{c}))))\n"
            ));
        }
    }
    d.push_str(")\n");

    let mut p = hdr;
    p.push_str(&format!(
        "(define (problem colorballs-{n}-{balls})\n  (:domain colorballs)\n  (:objects)\n  (:init (and\n    (at-1-1)\n"
    ));
    for x in 1..=n {
        for y in 1..=n {
            if (x, y) != (1, 1) {
                p.push_str(&format!("    (not (at-{x}-{y}))\n"));
            }
        }
    }
    for b in 1..=balls {
        p.push_str("    (oneof");
        for x in 1..=n {
            for y in 1..=n {
                for c in colors {
                    p.push_str(&format!(" (ball{b}-{x}-{y}-{c})"));
                }
            }
        }
        p.push_str(")\n");
        for c in colors {
            p.push_str(&format!("    (not (holding{b}-{c}))\n"));
        }
        p.push_str(&format!("    (not (done{b}))\n"));
    }
    p.push_str("  ))\n  (:goal (and");
    for b in 1..=balls {
        p.push_str(&format!(" (done{b})"));
    }
    p.push_str(")))\n");
    Ok((d, p))
}

// ---------------------------------------------------------------------------
// rocksample

fn rocksample(spec: &DomainSpec) -> Result<(String, String), GenError> {
    let (n, rocks) = two_params(spec, "rocksample", (2, 16), (1, 16))?;
    if rocks > n * n - 1 {
        return Err(invalid("rocksample", "more rocks than free cells"));
    }
    let hdr = header(
        spec,
        "rocks at seeded known cells, one oneof {good,bad} per rock; the antenna level (0..2) \
         gates sensing range (manhattan distance <= level); sample good rocks, dismiss bad ones",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut cells: Vec<(u32, u32)> = (1..=n)
        .flat_map(|x| (1..=n).map(move |y| (x, y)))
        .filter(|&(x, y)| (x, y) != (1, 1))
        .collect();
    cells.shuffle(&mut rng);
    let rock_cells: Vec<(u32, u32)> = cells.into_iter().take(rocks as usize).collect();

    let mut d = hdr.clone();
    d.push_str("(define (domain rocksample)\n  (:predicates\n");
    for x in 1..=n {
        for y in 1..=n {
            d.push_str(&format!("    (at-{x}-{y})\n"));
        }
    }
    for l in 0..=2 {
        d.push_str(&format!("    (antenna-{l})\n"));
    }
    for r in 1..=rocks {
        d.push_str(&format!(
            "    (rock{r}-good)\n    (rock{r}-bad)\n    (done{r})\n"
        ));
    }
    d.push_str("  )\n");
    for x in 1..=n {
        for y in 1..=n {
            for (tx, ty) in neighbors(x, y, n) {
                d.push_str(&format!(
                    "  (:action move-from-{x}-{y}-to-{tx}-{ty}\n    :parameters ()\n    :precondition (and (at-{x}-{y}))\n    :effect (and (at-{tx}-{ty}) (not (at-{x}-{y}))))\n"
                ));
            }
        }
    }
    for l in 0..2 {
        d.push_str(&format!(
            "  (:action raise-antenna-{l}\n    :parameters ()\n    :precondition (and (antenna-{l}))\n    :effect (and (antenna-{}) (not (antenna-{l}))))\n",
            l + 1
        ));
        d.push_str(&format!(
            "  (:action lower-antenna-{}\n    :parameters ()\n    :precondition (and (antenna-{}))\n    :effect (and (antenna-{l}) (not (antenna-{}))))\n",
            l + 1,
            l + 1,
            l + 1
        ));
    }
    for (r, &(rx, ry)) in rock_cells.iter().enumerate() {
        let r = r as u32 + 1;
        for l in 0..=2u32 {
            for x in 1..=n {
                for y in 1..=n {
                    let dist = x.abs_diff(rx) + y.abs_diff(ry);
                    if dist <= l {
                        d.push_str(&format!(
                            "  (:action sense-rock{r}-from-{x}-{y}-level-{l}\n    :parameters ()\n    :precondition (and (at-{x}-{y}) (antenna-{l}))\n    :effect (and)\n    :observe (rock{r}-good))\n"
                        ));
                    }
                }
            }
        }
        d.push_str(&format!(
            "  (:action sample-rock{r}\n    :parameters ()\n    :precondition (and (at-{rx}-{ry}) (rock{r}-good))\n    :effect (and (done{r}) (not (rock{r}-good))))\n"
        ));
        d.push_str(&format!(
            "  (:action dismiss-rock{r}\n    :parameters ()\n    :precondition (and (rock{r}-bad))\n    :effect (and (done{r})))\n"
        ));
    }
    d.push_str(")\n");

    let mut p = hdr;
    p.push_str(&format!(
        "(define (problem rocksample-{n}-{rocks})\n  (:domain rocksample)\n  (:objects)\n  (:init (and\n    (at-1-1)\n    (antenna-0)\n    (not (antenna-1))\n    (not (antenna-2))\n"
    ));
    for x in 1..=n {
        for y in 1..=n {
            if (x, y) != (1, 1) {
                p.push_str(&format!("    (not (at-{x}-{y}))\n"));
            }
        }
    }
    for r in 1..=rocks {
        p.push_str(&format!(
            "    (oneof (rock{r}-good) (rock{r}-bad))\n    (not (done{r}))\n"
        ));
    }
    p.push_str("  ))\n  (:goal (and");
    for r in 1..=rocks {
        p.push_str(&format!(" (done{r})"));
    }
    p.push_str(")))\n");
    Ok((d, p))
}

// ---------------------------------------------------------------------------
// mastermind

fn mastermind(spec: &DomainSpec) -> Result<(String, String), GenError> {
    let (pegs, colors) = two_params(spec, "mastermind", (2, 4), (2, 6))?;
    let hdr = header(
        spec,
        "one oneof per peg over its color; a guess latches unary threshold registers for exact \
         hits and color-only hits, then their values are observed; reset clears the registers",
    );
    let combos: Vec<Vec<u32>> = {
        let mut out: Vec<Vec<u32>> = vec![Vec::new()];
        for _ in 0..pegs {
            let mut next = Vec::new();
            for c in &out {
                for col in 1..=colors {
                    let mut v = c.clone();
                    v.push(col);
                    next.push(v);
                }
            }
            out = next;
        }
        out
    };
    let subsets = |k: u32| -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for mask in 1u32..(1 << pegs) {
            if mask.count_ones() == k {
                out.push(
                    (0..pegs)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| i + 1)
                        .collect(),
                );
            }
        }
        out
    };

    let mut d = hdr.clone();
    d.push_str("(define (domain mastermind)\n  (:predicates\n");
    for peg in 1..=pegs {
        for col in 1..=colors {
            d.push_str(&format!("    (peg{peg}-color{col})\n"));
        }
    }
    for t in 1..=pegs {
        d.push_str(&format!("    (exact-ge-{t})\n    (color-ge-{t})\n"));
    }
    d.push_str("    (ready)\n  )\n");
    d.push_str(
        "  (:action reset\n    :parameters ()\n    :precondition (and)\n    :effect (and (ready)",
    );
    for t in 1..=pegs {
        d.push_str(&format!(" (not (exact-ge-{t})) (not (color-ge-{t}))"));
    }
    d.push_str("))\n");
    for combo in &combos {
        let name: Vec<String> = combo.iter().map(|c| c.to_string()).collect();
        d.push_str(&format!(
            "  (:action guess-{}\n    :parameters ()\n    :precondition (and (ready))\n    :effect (and (not (ready))",
            name.join("-")
        ));
        let guessed_colors: Vec<u32> = {
            let mut v = combo.clone();
            v.sort_unstable();
            v.dedup();
            v
        };
        for t in 1..=pegs {
            for subset in subsets(t) {
                // Exact: every peg in the subset has its guessed color.
                d.push_str(" (when (and");
                for &peg in &subset {
                    d.push_str(&format!(" (peg{peg}-color{})", combo[(peg - 1) as usize]));
                }
                d.push_str(&format!(") (exact-ge-{t}))"));
                // Color-only: every peg in the subset has some guessed color.
                let mut assignments: Vec<Vec<u32>> = vec![Vec::new()];
                for _ in &subset {
                    let mut next = Vec::new();
                    for a in &assignments {
                        for &col in &guessed_colors {
                            let mut v = a.clone();
                            v.push(col);
                            next.push(v);
                        }
                    }
                    assignments = next;
                }
                for assign in assignments {
                    d.push_str(" (when (and");
                    for (i, &peg) in subset.iter().enumerate() {
                        d.push_str(&format!(" (peg{peg}-color{})", assign[i]));
                    }
                    d.push_str(&format!(") (color-ge-{t}))"));
                }
            }
        }
        d.push_str(")\n    :observe (and");
        for t in 1..=pegs {
            d.push_str(&format!(" (exact-ge-{t}) (color-ge-{t})"));
        }
        d.push_str("))\n");
    }
    d.push_str(")\n");

    let mut p = hdr;
    p.push_str(&format!(
        "(define (problem mastermind-{pegs}-{colors})\n  (:domain mastermind)\n  (:objects)\n  (:init (and\n"
    ));
    for peg in 1..=pegs {
        p.push_str("    (oneof");
        for col in 1..=colors {
            p.push_str(&format!(" (peg{peg}-color{col})"));
        }
        p.push_str(")\n");
    }
    for t in 1..=pegs {
        p.push_str(&format!(
            "    (not (exact-ge-{t}))\n    (not (color-ge-{t}))\n"
        ));
    }
    p.push_str("    (ready)\n  ))\n");
    p.push_str(&format!("  (:goal (and (exact-ge-{pegs}))))\n"));
    Ok((d, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::BeliefContext;
    use crate::model::initial_belief;
    use crate::parser;

    fn build(family: Family, params: &[u32], seed: u64) -> crate::model::PposProblem {
        let spec = DomainSpec {
            family,
            params: params.to_vec(),
            seed,
        };
        let (d, p) = generate(&spec).expect("generation");
        let (dom, prob) = parser::parse(&d, &p).expect("parse");
        parser::ground(&dom, &prob).expect("ground")
    }

    #[test]
    fn every_family_generates_and_grounds() {
        let cases: Vec<(Family, Vec<u32>)> = vec![
            (Family::Diseases, vec![3]),
            (Family::Wumpus, vec![4]),
            (Family::WumpusDeadend, vec![4]),
            (Family::WumpusRestart, vec![4]),
            (Family::Doors, vec![5]),
            (Family::Unix, vec![2]),
            (Family::Localize, vec![3]),
            (Family::ColorBalls, vec![3, 1]),
            (Family::RockSample, vec![4, 2]),
            (Family::MasterMind, vec![2, 3]),
        ];
        for (family, params) in cases {
            let g = build(family, &params, 7);
            // Initial belief must be satisfiable.
            BeliefContext::new(&g).unwrap_or_else(|e| panic!("{}: {e}", family.name()));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = DomainSpec {
            family: Family::RockSample,
            params: vec![5, 3],
            seed: 11,
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn diseases_matches_reference_counts() {
        let g = build(Family::Diseases, &[2], 0);
        assert_eq!(g.num_props(), 3);
        assert_eq!(g.actions.len(), 5);
        assert_eq!(initial_belief(&g, 16).len(), 2);
    }

    #[test]
    fn wumpus_four_matches_reference_model() {
        let g = build(Family::Wumpus, &[4], 0);
        for name in [
            "wumpus-at-2-3",
            "wumpus-at-3-2",
            "wumpus-at-3-4",
            "wumpus-at-4-3",
        ] {
            assert!(g.find_prop(name).is_some(), "missing {name}");
        }
        assert_eq!(
            g.prop_names
                .iter()
                .filter(|n| n.starts_with("wumpus-at"))
                .count(),
            4
        );
        // Goal at-4-4 and safety precondition on moves into candidate cells.
        assert_eq!(g.goal.len(), 1);
        assert_eq!(g.prop_name(g.goal[0].prop), "at-4-4");
        let mv = &g.actions[g.find_action("move-from-2-2-to-2-3").unwrap()];
        let w23 = g.find_prop("wumpus-at-2-3").unwrap();
        assert!(mv.pre.iter().any(|l| l.prop == w23 && l.negated));
        // Exactly the four belief states of the two oneof pairs.
        assert_eq!(initial_belief(&g, 64).len(), 4);
    }

    #[test]
    fn wumpus_five_has_four_initial_states() {
        let g = build(Family::Wumpus, &[5], 0);
        assert_eq!(initial_belief(&g, 64).len(), 4);
    }

    #[test]
    fn wumpus_move_changes_position_only() {
        let g = build(Family::Wumpus, &[4], 0);
        let s = initial_belief(&g, 64).remove(0);
        let mv = &g.actions[g.find_action("move-from-1-1-to-1-2").unwrap()];
        let next = crate::model::apply(mv, &s).unwrap();
        let at11 = g.find_prop("at-1-1").unwrap().index();
        let at12 = g.find_prop("at-1-2").unwrap().index();
        assert!(!next.get(at11));
        assert!(next.get(at12));
        for (i, name) in g.prop_names.iter().enumerate() {
            if !name.starts_with("at-") {
                assert_eq!(next.get(i), s.get(i), "{name} changed");
            }
        }
    }

    #[test]
    fn deadend_moves_drop_safety_and_can_kill() {
        let g = build(Family::WumpusDeadend, &[4], 0);
        let alive = g.find_prop("alive").unwrap();
        let w23 = g.find_prop("wumpus-at-2-3").unwrap();
        let mv = &g.actions[g.find_action("move-from-2-2-to-2-3").unwrap()];
        assert!(!mv.pre.iter().any(|l| l.prop == w23));
        assert!(mv.pre.iter().any(|l| l.prop == alive && !l.negated));
        assert!(mv.effects.iter().any(|e| e.effect.prop == alive
            && e.effect.negated
            && e.condition.iter().any(|c| c.prop == w23 && !c.negated)));
        // Every action requires staying alive.
        for a in &g.actions {
            assert!(
                a.pre.iter().any(|l| l.prop == alive && !l.negated),
                "{} does not require alive",
                a.name
            );
        }
    }

    #[test]
    fn restart_moves_bounce_home() {
        let g = build(Family::WumpusRestart, &[4], 0);
        let mv = &g.actions[g.find_action("move-from-2-2-to-2-3").unwrap()];
        let home = g.find_prop("at-1-1").unwrap();
        let w23 = g.find_prop("wumpus-at-2-3").unwrap();
        assert!(mv.effects.iter().any(|e| e.effect.prop == home
            && !e.effect.negated
            && e.condition.iter().any(|c| c.prop == w23 && !c.negated)));
        assert!(g.find_action("check-bump").is_some());
    }

    #[test]
    fn doors_has_one_oneof_per_wall() {
        let g = build(Family::Doors, &[5], 0);
        let b = initial_belief(&g, 64);
        assert_eq!(b.len(), 25, "two walls with five door rows each");
        // Crossing a wall cell requires its door.
        let mv = &g.actions[g.find_action("move-from-1-3-to-2-3").unwrap()];
        let door = g.find_prop("door-2-3").unwrap();
        assert!(mv.pre.iter().any(|l| l.prop == door && !l.negated));
    }

    #[test]
    fn localize_moves_pass_consistency_and_bump() {
        let g = build(Family::Localize, &[3], 0);
        // Splitting leaves sense-wall-north a pure effect action plus an
        // observation action.
        assert!(g.find_action("sense-wall-north").is_some());
        assert!(g.find_action("sense-wall-north-obs").is_some());
        let b = initial_belief(&g, 64);
        assert_eq!(b.len(), 9);
        // Moving north from the top row keeps the agent in place.
        let north = &g.actions[g.find_action("move-north").unwrap()];
        let top = g.find_prop("at-2-3").unwrap();
        let mut s = crate::bits::BitVec::zeros(g.num_props());
        s.set(top.index(), true);
        let next = crate::model::apply(north, &s).unwrap();
        assert!(next.get(top.index()));
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(matches!(
            generate(&DomainSpec {
                family: Family::Doors,
                params: vec![4],
                seed: 0
            }),
            Err(GenError::InvalidParams { .. })
        ));
        assert!(matches!(
            generate(&DomainSpec {
                family: Family::Wumpus,
                params: vec![1],
                seed: 0
            }),
            Err(GenError::InvalidParams { .. })
        ));
        assert!(matches!(
            generate(&DomainSpec {
                family: Family::Wumpus,
                params: vec![],
                seed: 0
            }),
            Err(GenError::InvalidParams { .. })
        ));
    }
}
