//! Scenario files: a time-ordered event list, one `at DAY HH:MM event …`
//! statement per event. Injected requirement payloads are braced blocks in
//! the model grammar, resolved against the base bundle plus everything
//! injected before them.

use std::collections::{BTreeMap, BTreeSet};

use fairadapt_core::model::ModelBundle;
use fairadapt_core::world::{Day, Event, EventKind, FieldValue, Timestamp};

use crate::diag::{self, Diagnostic, SourceSpan};
use crate::lexer::TokenKind;
use crate::lower::lower;
use crate::parser::{parse_decls, Parser};

pub fn parse_scenario(
    text: &str,
    file: &str,
    bundle: &ModelBundle,
) -> Result<Vec<Event>, Vec<Diagnostic>> {
    let mut p = Parser::new(text, file)?;
    let mut events = Vec::new();
    let mut errors: Vec<Diagnostic> = Vec::new();
    let mut last_time: Option<Timestamp> = None;
    let mut shoppers: BTreeSet<String> = BTreeSet::new();
    let mut items: BTreeSet<String> = BTreeSet::new();
    // Requirements available so far, for retire checks and fragment
    // resolution: the base bundle plus prior injections.
    let mut ctx = bundle.clone();

    while !p.at_eof() {
        match statement(
            &mut p, text, file, &mut last_time, &mut shoppers, &mut items, &mut ctx,
        ) {
            Ok(event) => events.push(event),
            Err(mut e) => {
                errors.append(&mut e);
                break;
            }
        }
    }
    if errors.is_empty() {
        Ok(events)
    } else {
        Err(errors)
    }
}

#[allow(clippy::too_many_arguments)]
fn statement(
    p: &mut Parser,
    text: &str,
    file: &str,
    last_time: &mut Option<Timestamp>,
    shoppers: &mut BTreeSet<String>,
    items: &mut BTreeSet<String>,
    ctx: &mut ModelBundle,
) -> Result<Event, Vec<Diagnostic>> {
    let at = p.expect_ident("`at`").map_err(|d| vec![d])?;
    if at.value != "at" {
        return Err(vec![Diagnostic::error(
            diag::UNEXPECTED_TOKEN,
            "expected `at` to start an event",
            at.span,
        )]);
    }
    let day_tok = p.expect_ident("a day (mon..sun)").map_err(|d| vec![d])?;
    let Some(day) = Day::parse(&day_tok.value) else {
        return Err(vec![Diagnostic::error(
            diag::UNKNOWN_DAY,
            format!("unknown day `{}`", day_tok.value),
            day_tok.span,
        )]);
    };
    let minutes = match p.peek().kind {
        TokenKind::Time(t) => {
            p.bump();
            t
        }
        _ => {
            return Err(vec![Diagnostic::error(
                diag::UNEXPECTED_TOKEN,
                "expected a time (HH:MM)",
                p.peek().span.clone(),
            )])
        }
    };
    let time = Timestamp { day, minutes };
    if let Some(prev) = *last_time {
        if (day as usize, minutes) < (prev.day as usize, prev.minutes) {
            return Err(vec![Diagnostic::error(
                diag::OUT_OF_ORDER,
                format!("event at {time} precedes the previous event at {prev}"),
                day_tok.span,
            )]);
        }
    }
    *last_time = Some(time);

    let kind_tok = p.expect_ident("an event kind").map_err(|d| vec![d])?;
    let kind = match kind_tok.value.as_str() {
        "enter" => {
            let mut fields = key_values(p)?;
            let shopper = take_id(&mut fields, "shopper", &kind_tok.span)?;
            shoppers.insert(shopper.clone());
            EventKind::EnterSystem { shopper, fields }
        }
        "add_item" | "remove_item" => {
            let mut fields = key_values(p)?;
            let shopper = take_id(&mut fields, "shopper", &kind_tok.span)?;
            let item = take_id(&mut fields, "item", &kind_tok.span)?;
            check_known(shoppers, &shopper, "shopper", &kind_tok.span)?;
            check_known(items, &item, "item", &kind_tok.span)?;
            if kind_tok.value == "add_item" {
                EventKind::AddItem { shopper, item }
            } else {
                EventKind::RemoveItem { shopper, item }
            }
        }
        "checkout" => {
            let mut fields = key_values(p)?;
            let shopper = take_id(&mut fields, "shopper", &kind_tok.span)?;
            check_known(shoppers, &shopper, "shopper", &kind_tok.span)?;
            EventKind::Checkout { shopper }
        }
        "stock" => {
            let mut fields = key_values(p)?;
            let item = take_id(&mut fields, "item", &kind_tok.span)?;
            let stock = match fields.remove("stock") {
                Some(FieldValue::Int(n)) => n,
                _ => {
                    return Err(vec![Diagnostic::error(
                        diag::UNEXPECTED_TOKEN,
                        "`stock` events need an integer `stock = N`",
                        kind_tok.span,
                    )])
                }
            };
            items.insert(item.clone());
            EventKind::StockChange { item, stock, fields }
        }
        "inject_requirement" => {
            let fragment = inject_block(p, text, file, ctx)?;
            *ctx = ctx.merged_with(&fragment);
            EventKind::InjectRequirement {
                fragment: Box::new(fragment),
            }
        }
        "retire_requirement" => {
            let mut fields = key_values(p)?;
            let fr = take_id(&mut fields, "fr", &kind_tok.span)?;
            if !ctx.requirements.contains_key(&fr) {
                return Err(vec![Diagnostic::error(
                    diag::UNKNOWN_INSTANCE,
                    format!("unknown requirement `{fr}`"),
                    kind_tok.span,
                )]);
            }
            *ctx = ctx.without_requirement(&fr);
            EventKind::RetireRequirement { fr }
        }
        other => {
            return Err(vec![Diagnostic::error(
                diag::UNKNOWN_EVENT,
                format!("unknown event kind `{other}`"),
                kind_tok.span,
            )])
        }
    };
    Ok(Event { time, kind })
}

/// `key = value` pairs until the next `at` or end of input.
fn key_values(p: &mut Parser) -> Result<BTreeMap<String, FieldValue>, Vec<Diagnostic>> {
    let mut out = BTreeMap::new();
    loop {
        match p.peek().kind.clone() {
            TokenKind::Ident(word) if word != "at" => {
                let key = p.expect_ident("a key").map_err(|d| vec![d])?;
                p.expect_punct('=').map_err(|d| vec![d])?;
                let value = match p.peek().kind.clone() {
                    TokenKind::Int(n) => {
                        p.bump();
                        FieldValue::Int(n)
                    }
                    TokenKind::Time(t) => {
                        p.bump();
                        FieldValue::Time(t)
                    }
                    TokenKind::Str(s) => {
                        p.bump();
                        FieldValue::Text(s)
                    }
                    TokenKind::Ident(w) => {
                        p.bump();
                        match w.as_str() {
                            "true" => FieldValue::Bool(true),
                            "false" => FieldValue::Bool(false),
                            _ => FieldValue::EnumValue(w),
                        }
                    }
                    _ => {
                        return Err(vec![Diagnostic::error(
                            diag::UNEXPECTED_TOKEN,
                            "expected a value",
                            p.peek().span.clone(),
                        )])
                    }
                };
                out.insert(key.value, value);
            }
            _ => break,
        }
    }
    Ok(out)
}

fn take_id(
    fields: &mut BTreeMap<String, FieldValue>,
    key: &str,
    span: &SourceSpan,
) -> Result<String, Vec<Diagnostic>> {
    match fields.remove(key) {
        Some(FieldValue::EnumValue(id)) | Some(FieldValue::Text(id)) => Ok(id),
        _ => Err(vec![Diagnostic::error(
            diag::UNEXPECTED_TOKEN,
            format!("this event needs `{key} = <id>`"),
            span.clone(),
        )]),
    }
}

fn check_known(
    known: &BTreeSet<String>,
    id: &str,
    what: &str,
    span: &SourceSpan,
) -> Result<(), Vec<Diagnostic>> {
    if known.contains(id) {
        Ok(())
    } else {
        Err(vec![Diagnostic::error(
            diag::UNKNOWN_INSTANCE,
            format!("unknown {what} `{id}` (not introduced by an earlier event)"),
            span.clone(),
        )])
    }
}

/// Reads the braced model fragment after `inject_requirement` and parses it
/// with the model grammar, resolved against everything visible so far. The
/// fragment text is padded with blank lines so its diagnostics keep the
/// original file coordinates.
fn inject_block(
    p: &mut Parser,
    text: &str,
    file: &str,
    ctx: &ModelBundle,
) -> Result<ModelBundle, Vec<Diagnostic>> {
    let open = p.expect_punct('{').map_err(|d| vec![d])?;
    let open_offset = offset_of(text, open.line, open.column).ok_or_else(|| {
        vec![Diagnostic::error(
            diag::UNEXPECTED_TOKEN,
            "inject block position not found",
            open.clone(),
        )]
    })?;
    let close_offset = matching_brace(text, open_offset).ok_or_else(|| {
        vec![Diagnostic::error(
            diag::UNEXPECTED_EOF,
            "unclosed inject_requirement block",
            open.clone(),
        )]
    })?;
    let inner = &text[open_offset + 1..close_offset];
    // Blank-line padding keeps line numbers aligned with the whole file.
    let padded = format!("{}{}", "\n".repeat(open.line - 1), inner);
    let decls = parse_decls(&padded, file)?;
    let (fragment, _warnings) = lower(&decls, file, Some(ctx))?;

    // Skip tokens up to and including the closing brace.
    let (close_line, close_col) = position_of(text, close_offset);
    while !p.at_eof() {
        let t = p.peek();
        if (t.span.line, t.span.column) > (close_line, close_col) {
            break;
        }
        p.bump();
    }
    Ok(fragment)
}

/// Byte offset of a 1-based (line, column) position; columns count chars.
fn offset_of(text: &str, line: usize, column: usize) -> Option<usize> {
    let mut cur_line = 1;
    let mut cur_col = 1;
    for (offset, c) in text.char_indices() {
        if cur_line == line && cur_col == column {
            return Some(offset);
        }
        if c == '\n' {
            cur_line += 1;
            cur_col = 1;
        } else {
            cur_col += 1;
        }
    }
    None
}

fn position_of(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in text.char_indices() {
        if i == offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

/// Index of the brace matching the one at `open`, honouring `#` comments
/// and string literals.
fn matching_brace(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut in_comment = false;
    let mut escaped = false;
    for (i, c) in text[open..].char_indices() {
        let i = open + i;
        if in_comment {
            if c == '\n' {
                in_comment = false;
            }
            continue;
        }
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '#' => in_comment = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}
