use std::fs;

use anyhow::{bail, Context, Result};
use osf::balanced::{build_balanced, induction_bound_audit, min_delta, verify_balanced, BalancedDual, BuildOptions};
use osf::dual::{certify_all_classes, girth_audit, moore_bound_audit_aux, verify_class_duals, AuxiliaryGraph, ClassDualCollection};
use osf::opt::{dual_lower_bound_audit, steiner_forest_exact};
use osf::scalar::format_fraction;
use osf::{ExactInstance, ExactTrace, Weight};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{caps, clause_map, default_bound, load_source, need, optimum, parse_alpha, print_json, write_text, CertKind, CertifyArgs};

/// One class of a class-dual certificate file.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassEntry {
    class_index: u64,
    pairs: Vec<usize>,
    certificate: Value,
}

struct ClassCert {
    class_index: u64,
    pairs: Vec<usize>,
    collection: ClassDualCollection<Weight>,
    aux: AuxiliaryGraph,
}

fn class_certs(a: &CertifyArgs, inst: &ExactInstance, trace: &ExactTrace) -> Result<Vec<ClassCert>> {
    if let Some(path) = &a.certificate {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let entries: Vec<ClassEntry> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        return entries
            .into_iter()
            .map(|e| {
                let (collection, aux) = ClassDualCollection::from_json(&e.certificate.to_string())?;
                Ok(ClassCert { class_index: e.class_index, pairs: e.pairs, collection, aux })
            })
            .collect();
    }
    Ok(certify_all_classes(trace, inst)?
        .into_iter()
        .map(|c| ClassCert { class_index: c.class_index, pairs: c.class_pairs, collection: c.collection, aux: c.aux })
        .collect())
}

fn class_file(certs: &[ClassCert]) -> Result<String> {
    let entries: Vec<ClassEntry> = certs
        .iter()
        .map(|c| {
            Ok(ClassEntry {
                class_index: c.class_index,
                pairs: c.pairs.clone(),
                certificate: serde_json::from_str(&c.collection.to_json(&c.aux))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(serde_json::to_string(&entries)?)
}

fn balanced(a: &CertifyArgs, inst: &ExactInstance, trace: &ExactTrace) -> Result<(BalancedDual<Weight>, u64)> {
    let alpha = parse_alpha(&a.alpha)?;
    let k_bound = a.k_bound.unwrap_or_else(|| default_bound(inst, trace));
    let delta = a.delta.unwrap_or_else(|| min_delta(&alpha, k_bound));
    if let Some(path) = &a.certificate {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok((BalancedDual::from_json(&text)?, delta));
    }
    Ok((build_balanced(trace, inst, k_bound, delta, &alpha, &BuildOptions::default())?, delta))
}

pub fn certify(a: CertifyArgs) -> Result<bool> {
    let (inst, trace) = load_source(&a.source)?;
    let head = json!({ "digest": inst.digest(), "rule": trace.rule.name() });
    let mut report = head.as_object().cloned().unwrap_or_default();
    let ok = match a.kind {
        CertKind::ClassDuals => {
            let certs = class_certs(&a, &inst, &trace)?;
            let mut ok = true;
            let mut classes = Vec::new();
            for c in &certs {
                if c.pairs.iter().any(|&p| p >= inst.pair_count()) {
                    bail!("class {} names a pair outside the instance", c.class_index);
                }
                let rep = verify_class_duals(&c.collection, &c.aux, &trace, &inst, &c.pairs, &c.pairs);
                let girth = girth_audit(&c.aux, c.pairs.len());
                let moore = moore_bound_audit_aux(&c.aux).consistent();
                ok &= rep.all_hold() && girth.holds && moore;
                classes.push(json!({
                    "class": c.class_index,
                    "pairs": c.pairs.len(),
                    "balls": c.collection.balls.len(),
                    "aux_edges": c.aux.edges.len(),
                    "clauses": clause_map(&rep.clauses()),
                    "aux_girth": girth.girth,
                    "aux_girth_required": girth.required,
                    "aux_girth_ok": girth.holds,
                    "moore_consistent": moore,
                    "offending": rep.offending,
                }));
            }
            if let Some(p) = &a.out {
                write_text(p, &class_file(&certs)?)?;
            }
            report.insert("kind".into(), json!("class-duals"));
            report.insert("classes".into(), Value::Array(classes));
            ok
        }
        CertKind::DualLb => {
            let certs = class_certs(&a, &inst, &trace)?;
            let opt = need(optimum(steiner_forest_exact(&inst, caps()?))?, "exact optimum")?;
            let mut ok = true;
            let mut classes = Vec::new();
            for c in &certs {
                let audit = dual_lower_bound_audit(&c.collection.dual_balls(), &inst, &opt.weight);
                ok &= audit.premises_hold() && audit.bound_holds == Some(true);
                classes.push(json!({
                    "class": c.class_index,
                    "disjoint": audit.disjoint,
                    "radius_below_mate": audit.radius_below_mate,
                    "centered_at_terminal": audit.centered_at_terminal,
                    "sum_radii": format_fraction(&audit.sum_radii),
                    "bound_holds": audit.bound_holds,
                    "offending": audit.offending,
                }));
            }
            if let Some(p) = &a.out {
                write_text(p, &class_file(&certs)?)?;
            }
            report.insert("kind".into(), json!("dual-lb"));
            report.insert("opt".into(), json!(format_fraction(&opt.weight)));
            report.insert("classes".into(), Value::Array(classes));
            report.insert("bound_holds".into(), json!(ok));
            ok
        }
        CertKind::Balanced => {
            let (bd, delta) = balanced(&a, &inst, &trace)?;
            let rep = verify_balanced(&bd, &trace, &inst);
            if let Some(p) = &a.out {
                write_text(p, &bd.to_json())?;
            }
            report.insert("kind".into(), json!("balanced"));
            report.insert("k_bound".into(), json!(bd.k_bound));
            report.insert("delta".into(), json!(delta));
            report.insert("balls".into(), json!(bd.balls.len()));
            report.insert("deleted".into(), json!(bd.deleted.len()));
            report.insert("dangerous".into(), json!(bd.dangerous.len()));
            report.insert("clauses".into(), clause_map(&rep.clauses()));
            report.insert("inconclusive".into(), json!(rep.inconclusive));
            report.insert("offending".into(), json!(rep.offending));
            rep.all_hold()
        }
        CertKind::InductionBound => {
            let (bd, delta) = balanced(&a, &inst, &trace)?;
            let rep = verify_balanced(&bd, &trace, &inst);
            let opt = need(optimum(steiner_forest_exact(&inst, caps()?))?, "exact optimum")?;
            let audit = induction_bound_audit(&bd, &opt, &inst, &trace, delta)?;
            if let Some(p) = &a.out {
                write_text(p, &bd.to_json())?;
            }
            let per_class: Vec<Value> = audit
                .per_class
                .iter()
                .map(|(j, k, w)| json!({ "class": j, "k": k, "w": format_fraction(w) }))
                .collect();
            report.insert("kind".into(), json!("induction-bound"));
            report.insert("delta".into(), json!(delta));
            report.insert("certificate_valid".into(), json!(rep.all_hold()));
            report.insert("lhs".into(), json!(format_fraction(&audit.lhs)));
            report.insert("per_class".into(), Value::Array(per_class));
            report.insert("rhs_lower".into(), json!(format_fraction(&audit.rhs_lower)));
            report.insert("rhs_upper".into(), json!(format_fraction(&audit.rhs_upper)));
            report.insert("verdict_detail".into(), json!(audit.verdict));
            rep.all_hold() && audit.holds()
        }
    };
    report.insert("verdict".into(), json!(if ok { "pass" } else { "fail" }));
    print_json(&Value::Object(report))?;
    Ok(ok)
}
