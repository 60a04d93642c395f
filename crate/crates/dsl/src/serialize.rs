//! Canonical text form: stakeholders, resources, requirements, operations —
//! each section alphabetical by id. Parsing the output reproduces the
//! bundle structurally.

use fairadapt_core::model::{
    Decomposition, FieldKind, Literal, ModelBundle, Operand, StakeholderKind,
};

pub fn serialize(bundle: &ModelBundle) -> String {
    let mut out = String::from("# fairadapt model\n");
    if bundle.stakeholders.is_empty()
        && bundle.resources.is_empty()
        && bundle.requirements.is_empty()
        && bundle.operations.is_empty()
    {
        return out;
    }

    for s in bundle.stakeholders.values() {
        let kind = match s.kind {
            StakeholderKind::Individual => "individual",
            StakeholderKind::Group => "group",
            StakeholderKind::Organization => "organization",
            StakeholderKind::Authority => "authority",
        };
        out.push_str(&format!(
            "stakeholder {} kind = {kind} name = {}\n",
            s.id,
            quote(&s.name)
        ));
    }

    for ty in bundle.resources.values() {
        out.push_str(&format!("\nresource {} {{\n", ty.name));
        for (field, kind) in &ty.fields {
            out.push_str(&format!("  {field}: {};\n", kind_text(kind)));
        }
        out.push_str("}\n");
    }

    if !bundle.requirements.is_empty() {
        out.push('\n');
    }
    for fr in bundle.requirements.values() {
        let affects: Vec<&str> = fr.affects.iter().map(String::as_str).collect();
        out.push_str(&format!(
            "requirement {} {} specified_by = {} affects = [{}] priority = {}",
            fr.id,
            quote(&fr.description),
            fr.specified_by,
            affects.join(", "),
            fr.priority
        ));
        match fr.decomposition {
            Decomposition::Leaf => {
                out.push_str(&format!(" leaf {}\n", fr.ofr.as_deref().unwrap_or("?")));
            }
            Decomposition::And | Decomposition::Or => {
                let kw = if fr.decomposition == Decomposition::Or {
                    "OR"
                } else {
                    "AND"
                };
                out.push_str(&format!(
                    " decompose {kw} {{ {} }}\n",
                    fr.children.join(", ")
                ));
            }
        }
    }

    for op in bundle.operations.values() {
        out.push_str(&format!("\noperation {} for {} {{\n  rule:", op.id, op.ofr));
        let conds: Vec<String> = op
            .rule
            .conditions
            .iter()
            .map(|c| {
                format!(
                    "{} {} {}",
                    c.lhs,
                    c.op.symbol(),
                    operand_text(&c.rhs)
                )
            })
            .collect();
        out.push_str(&format!(" {};\n", conds.join(" and ")));
        let a = &op.action;
        let params: Vec<String> = a
            .params
            .iter()
            .map(|(k, v)| format!("{k} = {}", operand_text(v)))
            .collect();
        out.push_str(&format!("  action: {} {}({})", a.name, a.verb.name(), params.join(", ")));
        if !a.reads.is_empty() {
            let reads: Vec<&str> = a.reads.iter().map(String::as_str).collect();
            out.push_str(&format!(" reads [{}]", reads.join(", ")));
        }
        let writes: Vec<&str> = a.writes.iter().map(String::as_str).collect();
        out.push_str(&format!(" writes [{}];\n}}\n", writes.join(", ")));
    }
    out
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

fn kind_text(kind: &FieldKind) -> String {
    match kind {
        FieldKind::Integer => "int".into(),
        FieldKind::Boolean => "bool".into(),
        FieldKind::Text => "text".into(),
        FieldKind::TimeOfDay => "time".into(),
        FieldKind::Enum(variants) => format!("enum({})", variants.join(", ")),
        FieldKind::Reference(ty) => format!("ref({ty})"),
        FieldKind::SetOf(ty) => format!("set({ty})"),
    }
}

fn literal_text(lit: &Literal) -> String {
    match lit {
        Literal::Int(n) => n.to_string(),
        Literal::Bool(b) => b.to_string(),
        Literal::Text(s) => quote(s),
        Literal::EnumValue(v) => v.clone(),
        Literal::Time(t) => format!("{:02}:{:02}", t / 60, t % 60),
    }
}

fn operand_text(op: &Operand) -> String {
    match op {
        Operand::Literal(lit) => literal_text(lit),
        Operand::Path(p) => p.to_string(),
    }
}
