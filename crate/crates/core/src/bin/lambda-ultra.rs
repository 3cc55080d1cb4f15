use std::io::{Read, Write};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use lambda_ultra::engine::{amalgamate_k, complete, EngineError};
use lambda_ultra::eqlift::{cl0, cl0_oracle, K0Error};
use lambda_ultra::harness::{
    enumerate_structures, expansion_check, expansion_search, ramsey_check, ramsey_search, Family, HarnessError, Item,
    RamseyVerdict,
};
use lambda_ultra::json::{
    decode_map, named_lattice, JsonError, K0Json, KJson, LatticeJson, OrderJson, OrderedJson, SpaceJson,
};
use lambda_ultra::kstruct::{diagnose, retract, Mode};
use lambda_ultra::lattice::Lattice;
use lambda_ultra::space::amalgamate_spaces;
use lambda_ultra::sqo::{compose, linearize, restrict, LinearLabel, TopOrders};
use lambda_ultra::transfer::{kernel, lift, represent, represent_points};

#[derive(Parser)]
#[command(
    name = "lambda-ultra",
    version,
    about = "Lattice-valued ultrametric spaces, their lifts, and desk-scale Ramsey checks"
)]
struct Cli {
    /// Print results as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Work limit for exhaustive searches.
    #[arg(long, global = true, default_value_t = 1 << 24)]
    budget: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lattice validation and Hasse diagrams.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Validate or amalgamate ultrametric spaces.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Subquotient order operations.
    #[command(subcommand)]
    Sqo(SqoCmd),
    /// Structures of classes.
    #[command(subcommand)]
    K0(K0Cmd),
    /// Lifted structures: diagnostics and the order retraction.
    #[command(subcommand)]
    Kstruct(KCmd),
    /// Lift an ordered space.
    Lift { file: String },
    /// Read an ordered space back from a lifted structure.
    Represent {
        file: String,
        /// Keep only the points of bottom-sort elements.
        #[arg(long)]
        points: bool,
    },
    /// Elements of a lifted structure coming from the space itself.
    Kernel { file: String },
    /// Amalgamate closed lifted structures.
    Amalgamate { file: String },
    /// Complete a union of copies of a closed lifted structure.
    Complete { file: String },
    /// List structures of one size up to isomorphism.
    Enumerate {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        lattice: String,
        #[arg(short, long)]
        n: usize,
    },
    /// Does every colouring of copies of A in C have a monochromatic B?
    RamseyCheck(RamseyArgs),
    /// Smallest C, in enumeration order, for which the Ramsey check holds.
    RamseySearch {
        #[command(flatten)]
        pick: Pick,
        #[arg(short, long, default_value_t = 2)]
        r: usize,
        #[arg(long)]
        bound: usize,
    },
    /// Does an ordered space embed into every expansion of a space?
    ExpansionCheck {
        file: String,
        /// Search spaces up to this size instead of reading one.
        #[arg(long)]
        search: Option<usize>,
    },
}

#[derive(Subcommand)]
enum LatticeCmd {
    Check { lattice: String },
    Dot { lattice: String },
}

#[derive(Subcommand)]
enum SpaceCmd {
    Check { file: String },
    Amalgamate { file: String },
}

#[derive(Subcommand)]
enum SqoCmd {
    Compose { file: String },
    Restrict { file: String },
    Derive { file: String },
    Linearize { file: String },
}

#[derive(Subcommand)]
enum K0Cmd {
    Close {
        file: String,
        /// Also compare against the realization oracle.
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Subcommand)]
enum KCmd {
    Check { file: String },
    Reinterpret { file: String },
}

#[derive(Args)]
struct Pick {
    #[arg(long, default_value = "ordered_space")]
    family: Family,
    #[arg(long, default_value = "ch2")]
    lattice: String,
    /// Size of `A` (first enumerated structure of that size).
    #[arg(long)]
    a: usize,
    #[arg(long)]
    b: usize,
}

#[derive(Args)]
struct RamseyArgs {
    #[command(flatten)]
    pick: Pick,
    #[arg(long)]
    c: usize,
    #[arg(short, long, default_value_t = 2)]
    r: usize,
}

/// Exit status 0 / 1; budget failures exit with 2 through [`Failure`].
enum Outcome {
    Holds,
    Fails,
}

enum Failure {
    Invalid(String),
    Budget(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = Out { json: cli.json };
    match run(&cli, &out) {
        Ok(Outcome::Holds) => ExitCode::from(0),
        Ok(Outcome::Fails) => ExitCode::from(1),
        Err(Failure::Invalid(e)) => {
            out.error(&e);
            ExitCode::from(1)
        }
        Err(Failure::Budget(e)) => {
            out.error(&e);
            ExitCode::from(2)
        }
    }
}

struct Out {
    json: bool,
}

impl Out {
    // A closed pipe (`| head`) is not an error worth a panic.
    fn show(&self, v: Value, text: impl FnOnce() -> String) {
        let body = if self.json { serde_json::to_string_pretty(&v).expect("serializable") } else { text() };
        let _ = writeln!(std::io::stdout().lock(), "{body}");
    }

    fn error(&self, e: &str) {
        if self.json {
            println!("{}", json!({ "error": e }));
        } else {
            eprintln!("error: {e}");
        }
    }
}

fn read(file: &str) -> Result<String, Failure> {
    if file == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(std::fs::read_to_string(file).map_err(|e| Failure::Invalid(format!("{file}: {e}")))?)
    }
}

fn parse<T: for<'de> Deserialize<'de>>(file: &str) -> Result<T, Failure> {
    Ok(serde_json::from_str(&read(file)?).map_err(JsonError::from)?)
}

/// A lattice name such as `ch3`, or a file holding one.
fn lattice_arg(s: &str) -> Result<Lattice, Failure> {
    if let Some(l) = named_lattice(s) {
        return Ok(l);
    }
    Ok(parse::<LatticeJson>(s)?.decode()?)
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn verdict(ok: bool) -> Outcome {
    if ok {
        Outcome::Holds
    } else {
        Outcome::Fails
    }
}

fn run(cli: &Cli, out: &Out) -> Result<Outcome, Failure> {
    match &cli.cmd {
        Cmd::Lattice(LatticeCmd::Check { lattice }) => {
            let l = lattice_arg(lattice)?;
            let d = l.is_distributive();
            let mi: Vec<&str> = l.meet_irreducibles().into_iter().map(|e| l.label(e)).collect();
            out.show(json!({ "distributive": d, "meet_irreducibles": mi, "elements": l.labels() }), || {
                format!(
                    "{} elements, {}; meet-irreducible: {}",
                    l.len(),
                    if d { "distributive" } else { "not distributive" },
                    mi.join(" ")
                )
            });
            Ok(verdict(d))
        }
        Cmd::Lattice(LatticeCmd::Dot { lattice }) => {
            let l = lattice_arg(lattice)?;
            let dot = l.to_dot();
            out.show(json!({ "dot": dot }), || dot.clone());
            Ok(Outcome::Holds)
        }
        Cmd::Space(SpaceCmd::Check { file }) => {
            let j: SpaceJson = parse(file)?;
            match j.decode() {
                Ok(s) => {
                    out.show(json!({ "valid": true, "points": s.len() }), || {
                        format!("valid space on {} points", s.len())
                    });
                    Ok(Outcome::Holds)
                }
                Err(e) => {
                    out.show(json!({ "valid": false, "reason": e.to_string() }), || format!("invalid: {e}"));
                    Ok(Outcome::Fails)
                }
            }
        }
        Cmd::Space(SpaceCmd::Amalgamate { file }) => {
            #[derive(Deserialize)]
            struct In {
                base: SpaceJson,
                left: SpaceJson,
                right: SpaceJson,
                f1: Map<String, Value>,
                f2: Map<String, Value>,
            }
            let j: In = parse(file)?;
            let l = Arc::new(j.base.lattice.decode()?);
            let (base, a1, a2) = (j.base.decode_in(&l)?, j.left.decode_in(&l)?, j.right.decode_in(&l)?);
            let f1 = decode_map(&j.f1, &|x| base.point(x), base.len(), &|x| a1.point(x))?;
            let f2 = decode_map(&j.f2, &|x| base.point(x), base.len(), &|x| a2.point(x))?;
            let am = amalgamate_spaces(&base, &a1, &f1, &a2, &f2)?;
            let v = json!({
                "space": SpaceJson::encode(&am.space),
                "left": am.left.iter().map(|&p| am.space.label(p)).collect::<Vec<_>>(),
                "right": am.right.iter().map(|&p| am.space.label(p)).collect::<Vec<_>>(),
            });
            out.show(v.clone(), || pretty(&v));
            Ok(Outcome::Holds)
        }
        Cmd::Sqo(cmd) => sqo(cmd, out),
        Cmd::K0(K0Cmd::Close { file, oracle }) => {
            let k = parse::<K0Json>(file)?.decode()?;
            let c = cl0(&k).map_err(k0_failure)?;
            let agree = if *oracle { Some(cl0_oracle(&k).map_err(k0_failure)?.is_isomorphic(&c)) } else { None };
            let v = json!({ "closure": K0Json::encode(&c), "oracle_agrees": agree });
            out.show(v.clone(), || {
                let mut s = pretty(&K0Json::encode(&c));
                if let Some(a) = agree {
                    s.push_str(&format!("\noracle {}", if a { "agrees" } else { "DISAGREES" }));
                }
                s
            });
            Ok(verdict(agree != Some(false)))
        }
        Cmd::Kstruct(KCmd::Check { file }) => {
            let raw = parse::<KJson>(file)?.raw()?;
            let diags = diagnose(&raw.params, &raw.structure, &raw.labels, Mode::Full);
            let list: Vec<Value> = diags
                .iter()
                .map(|d| json!({ "constraint": format!("{:?}", d.constraint), "detail": d.detail }))
                .collect();
            out.show(json!({ "valid": diags.is_empty(), "violations": list }), || {
                if diags.is_empty() {
                    "valid".into()
                } else {
                    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
                }
            });
            Ok(verdict(diags.is_empty()))
        }
        Cmd::Kstruct(KCmd::Reinterpret { file }) => {
            let k = parse::<KJson>(file)?.decode()?;
            let r = retract(&k)?;
            let fixed = r == k;
            let v = json!({ "structure": KJson::encode(&r), "fixed": fixed });
            out.show(v, || pretty(&KJson::encode(&r)));
            Ok(Outcome::Holds)
        }
        Cmd::Lift { file } => {
            let x = parse::<OrderedJson>(file)?.decode()?;
            let params = Arc::new(lambda_ultra::kstruct::LiftParams::new(x.language.clone())?);
            let k = lift(&x, &params)?;
            let v = serde_json::to_value(KJson::encode(&k)).expect("serializable");
            out.show(v.clone(), || pretty(&v));
            Ok(Outcome::Holds)
        }
        Cmd::Represent { file, points } => {
            let k = parse::<KJson>(file)?.decode()?;
            let x = if *points { represent_points(&k)? } else { represent(&k)? };
            let v = serde_json::to_value(OrderedJson::encode(&x)).expect("serializable");
            out.show(v.clone(), || pretty(&v));
            Ok(Outcome::Holds)
        }
        Cmd::Kernel { file } => {
            #[derive(Deserialize)]
            struct In {
                structure: KJson,
                space: OrderedJson,
            }
            let j: In = parse(file)?;
            let k = j.structure.decode()?;
            let x = j.space.decode()?;
            let ker: Vec<&str> = kernel(&k, &x)?.into_iter().map(|i| k.label(i)).collect();
            out.show(json!({ "kernel": ker }), || ker.join(" "));
            Ok(Outcome::Holds)
        }
        Cmd::Amalgamate { file } => {
            #[derive(Deserialize)]
            struct In {
                base: KJson,
                left: KJson,
                right: KJson,
                f1: Map<String, Value>,
                f2: Map<String, Value>,
            }
            let j: In = parse(file)?;
            let base = j.base.decode()?;
            let p = base.params().clone();
            let (k1, k2) = (j.left.decode_with(p.clone())?, j.right.decode_with(p)?);
            let f1 = decode_map(&j.f1, &|x| base.find(x), base.len(), &|x| k1.find(x))?;
            let f2 = decode_map(&j.f2, &|x| base.find(x), base.len(), &|x| k2.find(x))?;
            let am = amalgamate_k(&base, &k1, &f1, &k2, &f2).map_err(engine_failure)?;
            let v = serde_json::to_value(KJson::encode(&am.structure)).expect("serializable");
            out.show(v.clone(), || pretty(&v));
            Ok(Outcome::Holds)
        }
        Cmd::Complete { file } => {
            #[derive(Deserialize)]
            struct In {
                b: KJson,
                c: KJson,
                copies: Vec<Map<String, Value>>,
            }
            let j: In = parse(file)?;
            let b = j.b.decode()?;
            let c = j.c.raw_with(b.params().clone())?;
            let cover = j
                .copies
                .iter()
                .map(|m| decode_map(m, &|x| b.find(x), b.len(), &|x| c.find(x)))
                .collect::<Result<Vec<_>, _>>()?;
            match complete(b.params(), &c.structure, &c.labels, &b, &cover) {
                Ok(k) => {
                    let v = serde_json::to_value(KJson::encode(&k)).expect("serializable");
                    out.show(v.clone(), || pretty(&v));
                    Ok(Outcome::Holds)
                }
                Err(EngineError::ConstraintViolated(d)) => {
                    let names: Vec<String> = d.iter().map(|d| format!("{:?}", d.constraint)).collect();
                    out.show(json!({ "error": "ConstraintViolated", "constraints": names }), || {
                        d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
                    });
                    Ok(Outcome::Fails)
                }
                Err(EngineError::OrderCycle(s)) => {
                    out.show(json!({ "error": "OrderCycle", "detail": s }), || format!("OrderCycle: {s}"));
                    Ok(Outcome::Fails)
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Enumerate { family, lattice, n } => {
            let l = Arc::new(lattice_arg(lattice)?);
            let items = enumerate_structures(*family, &l, *n, cli.budget).map_err(harness_failure)?;
            let list: Vec<Value> = items.iter().map(item_json).collect();
            out.show(json!({ "count": items.len(), "structures": list }), || {
                let mut s = format!("{} structures", items.len());
                for v in &list {
                    s.push('\n');
                    s.push_str(&serde_json::to_string(v).expect("serializable"));
                }
                s
            });
            Ok(Outcome::Holds)
        }
        Cmd::RamseyCheck(a) => {
            let (l, ia, ib) = pick(&a.pick, cli.budget)?;
            let ic = first_of(a.pick.family, &l, a.c, cli.budget)?;
            let v = ramsey_check(&ia.to_structure(), &ib.to_structure(), &ic.to_structure(), a.r, cli.budget)
                .map_err(harness_failure)?;
            match v {
                RamseyVerdict::Holds => {
                    out.show(json!({ "holds": true }), || "holds".into());
                    Ok(Outcome::Holds)
                }
                RamseyVerdict::Counterexample(col) => {
                    let c: Vec<Value> = col.iter().map(|(copy, k)| json!({ "copy": copy, "color": k })).collect();
                    out.show(json!({ "holds": false, "coloring": c }), || {
                        let mut s = "counterexample coloring:".to_string();
                        for (copy, k) in &col {
                            s.push_str(&format!("\n  {copy:?} -> {k}"));
                        }
                        s
                    });
                    Ok(Outcome::Fails)
                }
            }
        }
        Cmd::RamseySearch { pick: p, r, bound } => {
            let (l, ia, ib) = pick(p, cli.budget)?;
            match ramsey_search(p.family, &l, &ia, &ib, *r, *bound, cli.budget).map_err(harness_failure)? {
                Some(c) => {
                    out.show(json!({ "size": c.len(), "structure": item_json(&c) }), || {
                        format!("found C with {} elements", c.len())
                    });
                    Ok(Outcome::Holds)
                }
                None => {
                    out.show(json!({ "size": null }), || format!("none up to size {bound}"));
                    Ok(Outcome::Fails)
                }
            }
        }
        Cmd::ExpansionCheck { file, search } => {
            #[derive(Deserialize)]
            struct In {
                a: OrderedJson,
                b: Option<SpaceJson>,
            }
            let j: In = parse(file)?;
            let a = j.a.decode()?;
            match (search, j.b) {
                (Some(n), _) => match expansion_search(&a, *n, cli.budget).map_err(harness_failure)? {
                    Some(b) => {
                        out.show(json!({ "witness": SpaceJson::encode(&b) }), || {
                            format!("witness with {} points", b.len())
                        });
                        Ok(Outcome::Holds)
                    }
                    None => {
                        out.show(json!({ "witness": null }), || format!("no witness up to {n} points (inconclusive)"));
                        Ok(Outcome::Fails)
                    }
                },
                (None, Some(b)) => {
                    let b = b.decode_in(a.lattice())?;
                    let ok = expansion_check(&a, &b);
                    out.show(json!({ "holds": ok }), || if ok { "holds".into() } else { "fails".into() });
                    Ok(verdict(ok))
                }
                (None, None) => Err(Failure::Invalid("need `b` in the input or --search".into())),
            }
        }
    }
}

fn sqo(cmd: &SqoCmd, out: &Out) -> Result<Outcome, Failure> {
    let show_order = |o: &lambda_ultra::sqo::SubquotientOrder, s: &lambda_ultra::space::UltrametricSpace| {
        let v = serde_json::to_value(OrderJson::encode(o, s)).expect("serializable");
        out.show(v.clone(), || pretty(&v));
    };
    match cmd {
        SqoCmd::Compose { file } => {
            #[derive(Deserialize)]
            struct In {
                space: SpaceJson,
                outer: OrderJson,
                inner: OrderJson,
            }
            let j: In = parse(file)?;
            let s = j.space.decode()?;
            let o = compose(&s, &j.outer.decode(&s)?, &j.inner.decode(&s)?)?;
            show_order(&o, &s);
        }
        SqoCmd::Restrict { file } => {
            #[derive(Deserialize)]
            struct In {
                space: SpaceJson,
                order: OrderJson,
                level: String,
            }
            let j: In = parse(file)?;
            let s = j.space.decode()?;
            let g = s.lattice().elem(&j.level).ok_or_else(|| Failure::Invalid(format!("unknown level {}", j.level)))?;
            let o = restrict(&s, &j.order.decode(&s)?, g)?;
            show_order(&o, &s);
        }
        SqoCmd::Derive { file } => {
            #[derive(Deserialize)]
            struct In {
                #[serde(flatten)]
                x: OrderedJson,
                bottom: String,
                top: String,
            }
            let j: In = parse(file)?;
            let x = j.x.decode()?;
            let l = x.lattice().clone();
            let e = l.elem(&j.bottom).ok_or_else(|| Failure::Invalid(format!("unknown level {}", j.bottom)))?;
            let f = l.elem(&j.top).ok_or_else(|| Failure::Invalid(format!("unknown level {}", j.top)))?;
            let mut t = TopOrders::canonical(&x)?;
            let o = t.derive(e, f)?;
            show_order(&o, &x.space);
        }
        SqoCmd::Linearize { file } => {
            let x = parse::<OrderedJson>(file)?.decode()?;
            let l = x.lattice().clone();
            let lin = linearize(&x, lambda_ultra::sqo::Choice::canonical(&l))?;
            let mut m = Map::new();
            for (lab, seq) in &lin {
                let name = match lab {
                    LinearLabel::Slot(k) => {
                        let s = x.language.slots[*k];
                        format!("<{},{}", l.label(s.bottom), l.label(s.top))
                    }
                    LinearLabel::Star(e) => format!("<*{}", l.label(*e)),
                    LinearLabel::Convex(e) => format!("<{}", l.label(*e)),
                };
                m.insert(name, json!(seq.iter().map(|&p| x.space.label(p)).collect::<Vec<_>>()));
            }
            let v = Value::Object(m);
            out.show(v.clone(), || pretty(&v));
        }
    }
    Ok(Outcome::Holds)
}

fn item_json(i: &Item) -> Value {
    match i {
        Item::Space(s) => serde_json::to_value(SpaceJson::encode(s)),
        Item::Ordered(x) => serde_json::to_value(OrderedJson::encode(x)),
        Item::K0(k) => serde_json::to_value(K0Json::encode(k)),
        Item::K(k) => serde_json::to_value(KJson::encode(k)),
    }
    .expect("serializable")
}

fn first_of(f: Family, l: &Arc<Lattice>, n: usize, budget: u64) -> Result<Item, Failure> {
    enumerate_structures(f, l, n, budget)
        .map_err(harness_failure)?
        .into_iter()
        .next()
        .ok_or_else(|| Failure::Invalid(format!("no structure of size {n}")))
}

fn pick(p: &Pick, budget: u64) -> Result<(Arc<Lattice>, Item, Item), Failure> {
    let l = Arc::new(lattice_arg(&p.lattice)?);
    let a = first_of(p.family, &l, p.a, budget)?;
    let b = first_of(p.family, &l, p.b, budget)?;
    Ok((l, a, b))
}

fn harness_failure(e: HarnessError) -> Failure {
    match e {
        HarnessError::BudgetExceeded(_) => Failure::Budget(e.to_string()),
        _ => Failure::Invalid(e.to_string()),
    }
}

fn k0_failure(e: K0Error) -> Failure {
    match e {
        K0Error::SaturationBudgetExceeded(_) => Failure::Budget(e.to_string()),
        _ => Failure::Invalid(e.to_string()),
    }
}

fn engine_failure(e: EngineError) -> Failure {
    Failure::Invalid(e.to_string())
}
