//! Scene files: one JSON object naming a bundle and everything built on it.
//!
//! ```json
//! {
//!   "bundle": {"base_dim": 1, "fibre_dim": 1},
//!   "functions": {"F": "2 + x0*y0"},
//!   "sections": {"E": ["x0"]},
//!   "distributions": {
//!     "T": [{"type": "dirac_section", "section": "E", "weight": "bump(x0)", "beta": [0]}]
//!   },
//!   "operators": {"K": "T"},
//!   "profiles": {"P": {"m": [0, 1], "eps": [1.0, 0.5], "families": [["y0"]]}}
//! }
//! ```
//!
//! A section reference is a name or an inline component list. An operator is
//! a distribution name or an inline term list.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::bundle::{Section, TrivialBundle};
use crate::distribution::{density_layout, DensityTerm, DiracTerm, DistributionError, Term, TransversalDistribution};
use crate::expr::{parse, AxisBox, Expr, Layout, MultiIndex};
use crate::operators::{KernelOperator, OperatorError};
use crate::topology::{BoundedFamily, LfProfile};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}:{column}: invalid JSON: {message}")]
    Json {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{at}: {message}")]
    Schema { at: String, message: String },
    #[error("{at}: expression error at offset {offset}: {message}")]
    Expr {
        at: String,
        offset: usize,
        message: String,
    },
    #[error("{at}: unresolved {kind} `{name}`")]
    Unresolved { at: String, kind: &'static str, name: String },
    #[error("{at}: dimension mismatch: {message}")]
    Dimension { at: String, message: String },
}

#[derive(Clone, Debug)]
pub struct Profile {
    pub profile: LfProfile,
    pub families: Vec<BoundedFamily>,
}

/// A validated scene. Entries keep their file order.
#[derive(Clone, Debug)]
pub struct Scene {
    pub bundle: TrivialBundle,
    pub functions: Vec<(String, Expr)>,
    pub sections: Vec<(String, Section)>,
    pub distributions: Vec<(String, TransversalDistribution)>,
    pub operators: Vec<(String, KernelOperator)>,
    pub profiles: Vec<(String, Profile)>,
}

fn find<'a, T>(items: &'a [(String, T)], name: &str) -> Option<&'a T> {
    items.iter().find(|(n, _)| n == name).map(|(_, v)| v)
}

impl Scene {
    pub fn function(&self, name: &str) -> Option<&Expr> {
        find(&self.functions, name)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        find(&self.sections, name)
    }

    pub fn distribution(&self, name: &str) -> Option<&TransversalDistribution> {
        find(&self.distributions, name)
    }

    pub fn operator(&self, name: &str) -> Option<&KernelOperator> {
        find(&self.operators, name)
    }

    pub fn profile(&self, name: &str) -> Option<&Profile> {
        find(&self.profiles, name)
    }
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io {
        path: shown.clone(),
        message: e.to_string(),
    })?;
    parse_scene(&text, &shown)
}

/// Parses scene text; `origin` names the source in error messages.
pub fn parse_scene(text: &str, origin: &str) -> Result<Scene, SceneError> {
    let root: Value = serde_json::from_str(text).map_err(|e| SceneError::Json {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Loader::default().scene(&root)
}

#[derive(Default)]
struct Loader {
    names: BTreeSet<String>,
}

struct At(String);

impl fmt::Display for At {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl At {
    fn key(&self, k: &str) -> At {
        At(format!("{}.{k}", self.0))
    }

    fn index(&self, i: usize) -> At {
        At(format!("{}[{i}]", self.0))
    }

    fn schema(&self, message: impl Into<String>) -> SceneError {
        SceneError::Schema {
            at: self.0.clone(),
            message: message.into(),
        }
    }

    fn dimension(&self, message: impl fmt::Display) -> SceneError {
        SceneError::Dimension {
            at: self.0.clone(),
            message: message.to_string(),
        }
    }

    fn unresolved(&self, kind: &'static str, name: &str) -> SceneError {
        SceneError::Unresolved {
            at: self.0.clone(),
            kind,
            name: name.to_string(),
        }
    }
}

const KEYS: [&str; 6] = ["bundle", "functions", "sections", "distributions", "operators", "profiles"];

fn object<'a>(v: &'a Value, at: &At) -> Result<&'a Map<String, Value>, SceneError> {
    v.as_object().ok_or_else(|| at.schema("expected an object"))
}

fn array<'a>(v: &'a Value, at: &At) -> Result<&'a Vec<Value>, SceneError> {
    v.as_array().ok_or_else(|| at.schema("expected an array"))
}

fn string<'a>(v: &'a Value, at: &At) -> Result<&'a str, SceneError> {
    v.as_str().ok_or_else(|| at.schema("expected a string"))
}

fn uint(v: &Value, at: &At) -> Result<u64, SceneError> {
    v.as_u64().ok_or_else(|| at.schema("expected a non-negative integer"))
}

fn float(v: &Value, at: &At) -> Result<f64, SceneError> {
    v.as_f64().ok_or_else(|| at.schema("expected a number"))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, at: &At) -> Result<&'a Value, SceneError> {
    obj.get(key).ok_or_else(|| at.schema(format!("missing key `{key}`")))
}

fn only_keys(obj: &Map<String, Value>, allowed: &[&str], at: &At) -> Result<(), SceneError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(at.schema(format!("unknown key `{k}`"))),
        None => Ok(()),
    }
}

/// Parses an expression, telling layout violations apart from syntax.
pub(crate) fn expression(text: &str, layout: Layout, at: &str) -> Result<Expr, SceneError> {
    use crate::expr::ParseError;
    parse(text, layout).map_err(|e| match e {
        ParseError::VarOutOfRange { .. } => SceneError::Dimension {
            at: at.to_string(),
            message: e.to_string(),
        },
        _ => SceneError::Expr {
            at: at.to_string(),
            offset: e.offset(),
            message: e.to_string(),
        },
    })
}

fn boxed(v: &Value, dim: usize, at: &At) -> Result<AxisBox, SceneError> {
    let sides = array(v, at)?;
    if sides.len() != dim {
        return Err(at.dimension(format!("box has {} sides, expected {dim}", sides.len())));
    }
    let mut pairs = Vec::with_capacity(dim);
    for (i, s) in sides.iter().enumerate() {
        let at = at.index(i);
        let p = array(s, &at)?;
        if p.len() != 2 {
            return Err(at.schema("expected [lo, hi]"));
        }
        pairs.push([float(&p[0], &at.index(0))?, float(&p[1], &at.index(1))?]);
    }
    AxisBox::from_pairs(dim, Some(&pairs)).map_err(|m| at.schema(m))
}

fn distribution_error(e: DistributionError, at: &At) -> SceneError {
    match e {
        DistributionError::DimensionMismatch { .. } | DistributionError::Bundle(_) => at.dimension(e),
        _ => at.schema(e.to_string()),
    }
}

impl Loader {
    fn claim(&mut self, name: &str, at: &At) -> Result<(), SceneError> {
        if !self.names.insert(name.to_string()) {
            return Err(at.schema(format!("name `{name}` is already defined")));
        }
        Ok(())
    }

    fn scene(&mut self, root: &Value) -> Result<Scene, SceneError> {
        let top = At("$".into());
        let obj = object(root, &top)?;
        only_keys(obj, &KEYS, &top)?;
        let bundle = bundle(field(obj, "bundle", &top)?, &top.key("bundle"))?;
        let mut scene = Scene {
            bundle,
            functions: Vec::new(),
            sections: Vec::new(),
            distributions: Vec::new(),
            operators: Vec::new(),
            profiles: Vec::new(),
        };
        let empty = Map::new();
        let group = |key: &str| -> Result<&Map<String, Value>, SceneError> {
            match obj.get(key) {
                Some(v) => object(v, &top.key(key)),
                None => Ok(&empty),
            }
        };

        for (name, v) in group("functions")? {
            let at = top.key("functions").key(name);
            self.claim(name, &at)?;
            let e = expression(string(v, &at)?, bundle.layout(), &at.0)?;
            scene.functions.push((name.clone(), e));
        }
        for (name, v) in group("sections")? {
            let at = top.key("sections").key(name);
            self.claim(name, &at)?;
            let s = section(bundle, v, &at)?;
            scene.sections.push((name.clone(), s));
        }
        for (name, v) in group("distributions")? {
            let at = top.key("distributions").key(name);
            self.claim(name, &at)?;
            let t = distribution(&scene, v, &at)?;
            scene.distributions.push((name.clone(), t));
        }
        for (name, v) in group("operators")? {
            let at = top.key("operators").key(name);
            self.claim(name, &at)?;
            let t = match v {
                Value::String(r) => scene
                    .distribution(r)
                    .cloned()
                    .ok_or_else(|| at.unresolved("distribution", r))?,
                _ => distribution(&scene, v, &at)?,
            };
            let k = KernelOperator::new(t).map_err(|e| match e {
                OperatorError::NotPairBundle { .. } => at.dimension(e),
                _ => at.schema(e.to_string()),
            })?;
            scene.operators.push((name.clone(), k));
        }
        for (name, v) in group("profiles")? {
            let at = top.key("profiles").key(name);
            self.claim(name, &at)?;
            let p = profile(bundle, v, &at)?;
            scene.profiles.push((name.clone(), p));
        }
        Ok(scene)
    }
}

fn bundle(v: &Value, at: &At) -> Result<TrivialBundle, SceneError> {
    let obj = object(v, at)?;
    only_keys(obj, &["base_dim", "fibre_dim"], at)?;
    let l = uint(field(obj, "base_dim", at)?, &at.key("base_dim"))?;
    let k = uint(field(obj, "fibre_dim", at)?, &at.key("fibre_dim"))?;
    TrivialBundle::new(l as usize, k as usize).map_err(|e| at.dimension(e))
}

fn section(bundle: TrivialBundle, v: &Value, at: &At) -> Result<Section, SceneError> {
    let (components, domain) = match v {
        Value::Array(_) => (v, None),
        Value::Object(obj) => {
            only_keys(obj, &["components", "domain"], at)?;
            let domain = match obj.get("domain") {
                Some(d) => Some(boxed(d, bundle.base_dim, &at.key("domain"))?),
                None => None,
            };
            (field(obj, "components", at)?, domain)
        }
        _ => return Err(at.schema("expected a component list or {components, domain}")),
    };
    let comps = array(components, at)?;
    if comps.len() != bundle.fibre_dim {
        return Err(at.dimension(format!(
            "section has {} components, fibre dimension is {}",
            comps.len(),
            bundle.fibre_dim
        )));
    }
    let exprs = comps
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let at = at.index(i);
            expression(string(c, &at)?, bundle.base_layout(), &at.0)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Section::new(bundle, exprs, domain).map_err(|e| at.dimension(e))
}

fn distribution(scene: &Scene, v: &Value, at: &At) -> Result<TransversalDistribution, SceneError> {
    let bundle = scene.bundle;
    let mut terms = Vec::new();
    for (i, tv) in array(v, at)?.iter().enumerate() {
        let at = at.index(i);
        let obj = object(tv, &at)?;
        let kind = string(field(obj, "type", &at)?, &at.key("type"))?;
        let term: Term = match kind {
            "dirac_section" => {
                only_keys(obj, &["type", "section", "weight", "beta"], &at)?;
                let sv = field(obj, "section", &at)?;
                let s = match sv {
                    Value::String(r) => scene
                        .section(r)
                        .cloned()
                        .ok_or_else(|| at.key("section").unresolved("section", r))?,
                    _ => section(bundle, sv, &at.key("section"))?,
                };
                let wat = at.key("weight");
                let w = expression(string(field(obj, "weight", &at)?, &wat)?, bundle.base_layout(), &wat.0)?;
                let beta = match obj.get("beta") {
                    Some(b) => {
                        let bat = at.key("beta");
                        let entries = array(b, &bat)?
                            .iter()
                            .enumerate()
                            .map(|(j, e)| uint(e, &bat.index(j)).map(|n| n as u32))
                            .collect::<Result<Vec<_>, _>>()?;
                        if entries.len() != bundle.fibre_dim {
                            return Err(bat.dimension(format!(
                                "beta has {} entries, fibre dimension is {}",
                                entries.len(),
                                bundle.fibre_dim
                            )));
                        }
                        MultiIndex::new(entries)
                    }
                    None => MultiIndex::zeros(bundle.fibre_dim),
                };
                DiracTerm::new(s, w, beta).map_err(|e| distribution_error(e, &at))?.into()
            }
            "density" => {
                only_keys(obj, &["type", "phi", "hidden", "support"], &at)?;
                let hidden = match obj.get("hidden") {
                    Some(h) => uint(h, &at.key("hidden"))? as usize,
                    None => 0,
                };
                let layout = density_layout(bundle, hidden);
                let pat = at.key("phi");
                let phi = expression(string(field(obj, "phi", &at)?, &pat)?, layout, &pat.0)?;
                let bound = match obj.get("support") {
                    Some(b) => Some(boxed(b, layout.dim(), &at.key("support"))?),
                    None => None,
                };
                DensityTerm::with_hidden(bundle, phi, hidden, bound)
                    .map_err(|e| distribution_error(e, &at))?
                    .into()
            }
            other => return Err(at.key("type").schema(format!("unknown term type `{other}`"))),
        };
        terms.push(term);
    }
    TransversalDistribution::new(bundle, terms).map_err(|e| distribution_error(e, at))
}

fn profile(bundle: TrivialBundle, v: &Value, at: &At) -> Result<Profile, SceneError> {
    let obj = object(v, at)?;
    only_keys(obj, &["m", "eps", "families"], at)?;
    let mat = at.key("m");
    let m = array(field(obj, "m", at)?, &mat)?
        .iter()
        .enumerate()
        .map(|(i, e)| uint(e, &mat.index(i)).map(|n| n as u32))
        .collect::<Result<Vec<_>, _>>()?;
    let eat = at.key("eps");
    let eps = array(field(obj, "eps", at)?, &eat)?
        .iter()
        .enumerate()
        .map(|(i, e)| float(e, &eat.index(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let profile = LfProfile::new(m, eps).map_err(|e| at.schema(e.to_string()))?;
    let mut families = Vec::new();
    if let Some(fv) = obj.get("families") {
        let fat = at.key("families");
        for (i, members) in array(fv, &fat)?.iter().enumerate() {
            let at = fat.index(i);
            let exprs = array(members, &at)?
                .iter()
                .enumerate()
                .map(|(j, e)| {
                    let at = at.index(j);
                    expression(string(e, &at)?, bundle.fibre_layout(), &at.0)
                })
                .collect::<Result<Vec<_>, _>>()?;
            families.push(BoundedFamily::new(exprs).map_err(|e| at.schema(e.to_string()))?);
        }
    }
    Ok(Profile { profile, families })
}
