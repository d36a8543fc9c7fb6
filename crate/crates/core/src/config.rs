//! JSON scenario files.
//!
//! ```json
//! {
//!   "model": "four_level",
//!   "n_fock": 4,
//!   "params": { "g_ghz": 20, "kappa_ghz": 6, "gamma_ghz": [0.1], "delta_z_ghz": 100,
//!               "eta": 0.01, "epsilon_auto": true },
//!   "integrator": { "rel_tol": 1e-8, "abs_tol": 1e-10,
//!                   "grid": { "t_max": 400 } },
//!   "diffusion": { "gamma_I_ghz": 1.0, "n_nodes": 21 },
//!   "sweep": { "name": "eta", "values": [0.01, 0.025] }
//! }
//! ```
//!
//! Every key is optional; omitted keys take the default parameters. Unknown
//! keys are rejected. Overrides are `dotted.key=value` strings applied on
//! top of the file; the value is read as JSON when it parses, as a string
//! otherwise.

use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::experiments::{build_grid, ModelKind, Scenario, Sweep, SweepParameter};
use crate::lindblad::IntegratorConfig;
use crate::models::{DiffusionSpec, PhysicalParams};

const TOP_KEYS: &[&str] = &[
    "model",
    "n_fock",
    "params",
    "integrator",
    "diffusion",
    "sweep",
];
const PARAM_KEYS: &[&str] = &[
    "g_ghz",
    "g_e1_ghz",
    "kappa_ghz",
    "gamma_ghz",
    "gamma_d_ghz",
    "delta_z_ghz",
    "omega_c_ghz",
    "omega_a_ghz",
    "omega_laser_ghz",
    "delta_omega_ghz",
    "epsilon",
    "epsilon_auto",
    "drive_coupling",
    "eta",
];
const INTEGRATOR_KEYS: &[&str] = &["rel_tol", "abs_tol", "max_step", "max_steps", "grid"];
const GRID_KEYS: &[&str] = &[
    "times",
    "t_min",
    "t_split",
    "t_max",
    "n_geometric",
    "n_linear",
];
const DIFFUSION_KEYS: &[&str] = &["gamma_I_ghz", "n_nodes", "span"];
const SWEEP_KEYS: &[&str] = &["name", "values"];

/// Reads `path` (or starts from `{}` when `None`), applies `overrides` and
/// resolves the scenario.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<Scenario> {
    let doc = match path {
        Some(p) => read_document(p)?,
        None => Value::Object(Map::new()),
    };
    resolve(Value::Object(Map::new()), doc, overrides)
}

pub fn read_document(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::schema("<document>", e.to_string()))
}

/// Deep-merges `doc` over `base`, applies `overrides`, then resolves.
/// Presets pass their own settings as `base`.
pub fn resolve(base: Value, doc: Value, overrides: &[String]) -> Result<Scenario> {
    if !doc.is_object() {
        return Err(Error::schema("<document>", "top level must be an object"));
    }
    let mut merged = base;
    merge(&mut merged, doc);
    for o in overrides {
        apply_override(&mut merged, o)?;
    }
    scenario_from_value(&merged)
}

fn merge(into: &mut Value, from: Value) {
    match (into, from) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                match a.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        a.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// `params.eta=0.025`; a bare parameter name such as `eta=0.025` is
/// shorthand for `params.eta`.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::schema(spec, "override must look like key=value"))?;
    let key = key.trim();
    let path: Vec<&str> = if !key.contains('.') && PARAM_KEYS.contains(&key) {
        vec!["params", key]
    } else {
        key.split('.').collect()
    };
    check_known(&path)?;
    let value =
        serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
    let mut node = doc;
    for (i, part) in path.iter().enumerate() {
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == path.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Err(Error::schema(key, "empty key"))
}

fn check_known(path: &[&str]) -> Result<()> {
    let allowed: &[&str] = match path {
        [_] => TOP_KEYS,
        ["params", _] => PARAM_KEYS,
        ["integrator", _] => INTEGRATOR_KEYS,
        ["integrator", "grid", _] => GRID_KEYS,
        ["diffusion", _] => DIFFUSION_KEYS,
        ["sweep", _] => SWEEP_KEYS,
        _ => return Err(Error::UnknownKey(path.join("."))),
    };
    if allowed.contains(path.last().unwrap()) {
        Ok(())
    } else {
        Err(Error::UnknownKey(path.join(".")))
    }
}

fn object<'a>(v: &'a Value, path: &str, allowed: &[&str]) -> Result<&'a Map<String, Value>> {
    let map = v
        .as_object()
        .ok_or_else(|| Error::schema(path, "expected an object"))?;
    for k in map.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::UnknownKey(join(path, k)));
        }
    }
    Ok(map)
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn number(map: &Map<String, Value>, prefix: &str, key: &str) -> Result<Option<f64>> {
    let path = join(prefix, key);
    match map.get(key) {
        None => Ok(None),
        Some(v) => {
            let x = v
                .as_f64()
                .ok_or_else(|| Error::schema(&path, format!("expected a number, got {v}")))?;
            if !x.is_finite() {
                return Err(Error::schema(&path, "number is not finite"));
            }
            Ok(Some(x))
        }
    }
}

fn non_negative(map: &Map<String, Value>, prefix: &str, key: &str) -> Result<Option<f64>> {
    let x = number(map, prefix, key)?;
    if let Some(v) = x {
        if v < 0.0 {
            return Err(Error::schema(
                join(prefix, key),
                format!("must be >= 0, got {v}"),
            ));
        }
    }
    Ok(x)
}

fn positive(map: &Map<String, Value>, prefix: &str, key: &str) -> Result<Option<f64>> {
    let x = number(map, prefix, key)?;
    if let Some(v) = x {
        if v <= 0.0 {
            return Err(Error::schema(
                join(prefix, key),
                format!("must be > 0, got {v}"),
            ));
        }
    }
    Ok(x)
}

fn count(map: &Map<String, Value>, prefix: &str, key: &str) -> Result<Option<usize>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v.as_u64().map(|n| Some(n as usize)).ok_or_else(|| {
            Error::schema(
                join(prefix, key),
                format!("expected a non-negative integer, got {v}"),
            )
        }),
    }
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::schema(path, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            let p = format!("{path}[{i}]");
            let f = x
                .as_f64()
                .ok_or_else(|| Error::schema(&p, format!("expected a number, got {x}")))?;
            if f.is_finite() {
                Ok(f)
            } else {
                Err(Error::schema(&p, "number is not finite"))
            }
        })
        .collect()
}

pub fn scenario_from_value(doc: &Value) -> Result<Scenario> {
    let top = object(doc, "", TOP_KEYS)?;
    let model = match top.get("model") {
        None => ModelKind::ThreeLevel,
        Some(Value::String(s)) => ModelKind::parse(s).ok_or_else(|| {
            Error::schema(
                "model",
                format!("expected three_level, four_level or analytic, got {s:?}"),
            )
        })?,
        Some(v) => {
            return Err(Error::schema(
                "model",
                format!("expected a string, got {v}"),
            ))
        }
    };
    let mut scenario = Scenario::new(model);
    if let Some(n) = count(top, "", "n_fock")? {
        if n < 2 {
            return Err(Error::schema(
                "n_fock",
                format!("must be at least 2, got {n}"),
            ));
        }
        scenario.n_fock = n;
    }
    if let Some(v) = top.get("params") {
        scenario.params = params_from_value(v)?;
    }
    if let Some(v) = top.get("integrator") {
        scenario.grid = integrator_from_value(v)?;
    }
    if let Some(v) = top.get("diffusion") {
        let map = object(v, "diffusion", DIFFUSION_KEYS)?;
        let mut spec = DiffusionSpec::default();
        if let Some(x) = non_negative(map, "diffusion", "gamma_I_ghz")? {
            spec.gamma_i = x;
        }
        if let Some(n) = count(map, "diffusion", "n_nodes")? {
            if n < 3 || n % 2 == 0 {
                return Err(Error::schema(
                    "diffusion.n_nodes",
                    format!("must be odd and at least 3, got {n}"),
                ));
            }
            spec.n_nodes = n;
        }
        if let Some(x) = positive(map, "diffusion", "span")? {
            spec.span = x;
        }
        scenario.diffusion = Some(spec);
    }
    if let Some(v) = top.get("sweep") {
        let map = object(v, "sweep", SWEEP_KEYS)?;
        let name = match map.get("name") {
            Some(Value::String(s)) => s.as_str(),
            _ => return Err(Error::schema("sweep.name", "expected a parameter name")),
        };
        let parameter = SweepParameter::parse(name).ok_or_else(|| {
            let names: Vec<&str> = SweepParameter::ALL.iter().map(|p| p.name()).collect();
            Error::schema(
                "sweep.name",
                format!("{name:?} is not one of {}", names.join(", ")),
            )
        })?;
        let values = numbers(
            map.get("values")
                .ok_or_else(|| Error::schema("sweep.values", "missing"))?,
            "sweep.values",
        )?;
        if values.is_empty() {
            return Err(Error::schema("sweep.values", "must not be empty"));
        }
        scenario.sweep = Some(Sweep { parameter, values });
    }
    Ok(scenario)
}

fn params_from_value(v: &Value) -> Result<PhysicalParams> {
    const P: &str = "params";
    let map = object(v, P, PARAM_KEYS)?;
    let mut p = PhysicalParams::reference();
    if let Some(x) = non_negative(map, P, "g_ghz")? {
        p.g = x;
    }
    if let Some(x) = non_negative(map, P, "g_e1_ghz")? {
        p.g_e1 = Some(x);
    }
    if let Some(x) = non_negative(map, P, "kappa_ghz")? {
        p.kappa = x;
    }
    if let Some(v) = map.get("gamma_ghz") {
        let rates = match v {
            Value::Number(_) => numbers(&Value::Array(vec![v.clone()]), "params.gamma_ghz")?,
            _ => numbers(v, "params.gamma_ghz")?,
        };
        if rates.is_empty() || !(rates.len() == 1 || rates.len() == 2 || rates.len() == 4) {
            return Err(Error::schema(
                "params.gamma_ghz",
                format!("expected 1, 2 or 4 rates, got {}", rates.len()),
            ));
        }
        if let Some(r) = rates.iter().find(|&&r| r < 0.0) {
            return Err(Error::schema(
                "params.gamma_ghz",
                format!("rate {r} is negative"),
            ));
        }
        p.gamma = rates;
    }
    if let Some(x) = non_negative(map, P, "gamma_d_ghz")? {
        p.gamma_d = x;
    }
    if let Some(x) = number(map, P, "delta_z_ghz")? {
        p.delta_z = x;
    }
    for (key, slot) in [
        ("omega_c_ghz", &mut p.omega_c),
        ("omega_a_ghz", &mut p.omega_a),
        ("omega_laser_ghz", &mut p.omega_laser),
        ("delta_omega_ghz", &mut p.delta_omega),
    ] {
        if let Some(x) = number(map, P, key)? {
            *slot = x;
        }
    }
    let auto = match map.get("epsilon_auto") {
        None => None,
        Some(Value::Bool(b)) => Some(*b),
        Some(v) => {
            return Err(Error::schema(
                "params.epsilon_auto",
                format!("expected a boolean, got {v}"),
            ))
        }
    };
    let eps = non_negative(map, P, "epsilon")?;
    match (eps, auto) {
        (Some(_), Some(true)) => {
            return Err(Error::schema(
                "params.epsilon",
                "give either epsilon or epsilon_auto = true, not both",
            ))
        }
        (None, Some(false)) => {
            return Err(Error::schema(
                "params.epsilon",
                "epsilon_auto = false needs epsilon",
            ))
        }
        (e, _) => p.epsilon = e,
    }
    if let Some(x) = number(map, P, "drive_coupling")? {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::schema(
                "params.drive_coupling",
                format!("must be in (0, 1], got {x}"),
            ));
        }
        p.drive_coupling = x;
    }
    if let Some(x) = number(map, P, "eta")? {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::schema(
                "params.eta",
                format!("must be in [0, 1], got {x}"),
            ));
        }
        p.eta = x;
    }
    p.validate().map_err(|e| Error::schema(P, e.to_string()))?;
    Ok(p)
}

fn integrator_from_value(v: &Value) -> Result<IntegratorConfig> {
    const I: &str = "integrator";
    let map = object(v, I, INTEGRATOR_KEYS)?;
    let mut cfg = IntegratorConfig::with_grid(crate::experiments::default_grid());
    if let Some(x) = positive(map, I, "rel_tol")? {
        cfg.rel_tol = x;
    }
    if let Some(x) = positive(map, I, "abs_tol")? {
        cfg.abs_tol = x;
    }
    if let Some(x) = positive(map, I, "max_step")? {
        cfg.max_step = x;
    }
    if let Some(n) = count(map, I, "max_steps")? {
        cfg.max_steps = n.max(1);
    }
    if let Some(g) = map.get("grid") {
        const G: &str = "integrator.grid";
        let gm = object(g, G, GRID_KEYS)?;
        if let Some(t) = gm.get("times") {
            if gm.len() > 1 {
                return Err(Error::schema(G, "times excludes the other grid keys"));
            }
            cfg.output_grid = numbers(t, "integrator.grid.times")?;
        } else {
            let t_min = positive(gm, G, "t_min")?.unwrap_or(0.1);
            let t_split = positive(gm, G, "t_split")?.unwrap_or(10.0);
            let t_max = positive(gm, G, "t_max")?.unwrap_or(400.0);
            let n_geo = count(gm, G, "n_geometric")?.unwrap_or(100);
            let n_lin = count(gm, G, "n_linear")?.unwrap_or(499);
            if !(t_min < t_split && t_split < t_max) {
                return Err(Error::schema(G, "need t_min < t_split < t_max"));
            }
            cfg.output_grid = build_grid(t_min, t_split, t_max, n_geo, n_lin);
        }
    }
    cfg.validate()
        .map_err(|e| Error::schema(I, e.to_string()))?;
    Ok(cfg)
}

/// Fully resolved scenario as a JSON document that parses back to the same
/// scenario. Explicit grids are listed only by their length and end point.
pub fn scenario_to_value(s: &Scenario) -> Value {
    let p = &s.params;
    let mut params = serde_json::json!({
        "g_ghz": p.g,
        "kappa_ghz": p.kappa,
        "gamma_ghz": p.gamma,
        "gamma_d_ghz": p.gamma_d,
        "delta_z_ghz": p.delta_z,
        "omega_c_ghz": p.omega_c,
        "omega_a_ghz": p.omega_a,
        "omega_laser_ghz": p.omega_laser,
        "delta_omega_ghz": p.delta_omega,
        "drive_coupling": p.drive_coupling,
        "eta": p.eta,
    });
    let m = params.as_object_mut().expect("object");
    if let Some(g1) = p.g_e1 {
        m.insert("g_e1_ghz".into(), g1.into());
    }
    match p.epsilon {
        Some(e) => m.insert("epsilon".into(), e.into()),
        None => m.insert("epsilon_auto".into(), true.into()),
    };
    let mut doc = serde_json::json!({
        "model": s.model.name(),
        "n_fock": s.n_fock,
        "params": params,
        "integrator": {
            "rel_tol": s.grid.rel_tol,
            "abs_tol": s.grid.abs_tol,
            "max_step": s.grid.max_step,
            "max_steps": s.grid.max_steps,
            "grid": { "times": s.grid.output_grid },
        },
    });
    let m = doc.as_object_mut().expect("object");
    if let Some(d) = &s.diffusion {
        m.insert(
            "diffusion".into(),
            serde_json::json!({ "gamma_I_ghz": d.gamma_i, "n_nodes": d.n_nodes, "span": d.span }),
        );
    }
    if let Some(sw) = &s.sweep {
        m.insert(
            "sweep".into(),
            serde_json::json!({ "name": sw.parameter.name(), "values": sw.values }),
        );
    }
    doc
}

/// One-line summary of the resolved configuration for CSV headers; the
/// output grid is abbreviated to its size and end point.
pub fn describe(s: &Scenario) -> String {
    let mut v = scenario_to_value(s);
    let grid = &s.grid.output_grid;
    v["integrator"]["grid"] = serde_json::json!({
        "points": grid.len(),
        "t_max": grid.last().copied().unwrap_or(0.0),
    });
    v["resolved"] = serde_json::json!({
        "epsilon": s.params.epsilon(),
    });
    v.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn parse(doc: Value) -> Result<Scenario> {
        resolve(json!({}), doc, &[])
    }

    #[test]
    fn empty_document_gives_defaults() {
        let s = parse(json!({"model": "three_level"})).unwrap();
        assert_eq!(s.model, ModelKind::ThreeLevel);
        assert_eq!(s.params, PhysicalParams::reference());
        assert_eq!(s.params.g, 20.0);
        assert_eq!(s.params.kappa, 6.0);
        assert_eq!(s.params.gamma_channel(0).unwrap(), 0.1);
        assert_eq!(s.params.gamma_channel(1).unwrap(), 0.1);
        assert_eq!(s.params.eta, 0.01);
        assert!(s.params.epsilon.is_none());
        assert_eq!(s.n_fock, 4);
        assert_eq!(s.grid.output_grid.len(), 600);
        assert!(parse(json!({})).is_ok());
    }

    #[test]
    fn negative_kappa_names_the_key() {
        let err = parse(json!({"params": {"kappa_ghz": -1.0}})).unwrap_err();
        match err {
            Error::Schema { path, .. } => assert_eq!(path, "params.kappa_ghz"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_keys_are_errors() {
        for doc in [
            json!({"modle": "three_level"}),
            json!({"params": {"kapa_ghz": 6}}),
            json!({"integrator": {"grid": {"t_end": 3}}}),
        ] {
            assert!(matches!(parse(doc), Err(Error::UnknownKey(_))));
        }
        let mut d = json!({});
        assert!(matches!(
            apply_override(&mut d, "params.nope=1"),
            Err(Error::UnknownKey(_))
        ));
    }

    #[test]
    fn type_errors_report_paths() {
        let cases = [
            (json!({"params": {"eta": "high"}}), "params.eta"),
            (json!({"params": {"eta": 1.5}}), "params.eta"),
            (
                json!({"params": {"gamma_ghz": [0.1, "x"]}}),
                "params.gamma_ghz[1]",
            ),
            (
                json!({"sweep": {"name": "kappa", "values": [1]}}),
                "sweep.name",
            ),
            (json!({"model": "five_level"}), "model"),
            (json!({"diffusion": {"n_nodes": 4}}), "diffusion.n_nodes"),
        ];
        for (doc, key) in cases {
            match parse(doc) {
                Err(Error::Schema { path, .. }) => assert_eq!(path, key),
                other => panic!("{key}: {other:?}"),
            }
        }
    }

    #[test]
    fn overrides_apply_after_the_file() {
        let s = resolve(
            json!({"params": {"eta": 0.025}}),
            json!({"params": {"g_ghz": 10}}),
            &["kappa_ghz=3".into(), "integrator.rel_tol=1e-9".into()],
        )
        .unwrap();
        assert_eq!(s.params.eta, 0.025);
        assert_eq!(s.params.g, 10.0);
        assert_eq!(s.params.kappa, 3.0);
        assert_eq!(s.grid.rel_tol, 1e-9);
        let s = resolve(json!({}), json!({}), &["params.eta=0.025".into()]).unwrap();
        assert_eq!(s.params.eta, 0.025);
        assert!(resolve(json!({}), json!({}), &["eta".into()]).is_err());
    }

    #[test]
    fn epsilon_choice() {
        let s = parse(json!({"params": {"epsilon": 0.5}})).unwrap();
        assert_eq!(s.params.epsilon(), 0.5);
        assert!(parse(json!({"params": {"epsilon": 0.5, "epsilon_auto": true}})).is_err());
        assert!(parse(json!({"params": {"epsilon_auto": false}})).is_err());
    }

    #[test]
    fn missing_file_is_an_error() {
        let err = parse_config(Some(Path::new("/nonexistent/scenario.json")), &[]).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn malformed_json_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{ \"model\": ").unwrap();
        assert!(matches!(
            parse_config(Some(&path), &[]),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn resolved_document_round_trips() {
        let s = parse(json!({
            "model": "four_level",
            "n_fock": 5,
            "params": {"gamma_ghz": [0.1, 0.2, 0.3, 0.4], "epsilon": 0.2, "g_e1_ghz": 18},
            "integrator": {"grid": {"t_max": 50, "n_linear": 20}},
            "diffusion": {"gamma_I_ghz": 1.0},
            "sweep": {"name": "gamma_d", "values": [0, 1]},
        }))
        .unwrap();
        let back = scenario_from_value(&scenario_to_value(&s)).unwrap();
        assert_eq!(back.model, s.model);
        assert_eq!(back.n_fock, 5);
        assert_eq!(back.params, s.params);
        assert_eq!(back.grid.output_grid, s.grid.output_grid);
        assert_eq!(back.diffusion, s.diffusion);
        assert_eq!(back.sweep, s.sweep);
    }
}
