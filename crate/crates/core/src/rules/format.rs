use super::ast::{Condition, RiskRule, RuleSet, Severity};

/// Canonical, minimally parenthesized rendering. One rule per line; ids of the form `r<n>`
/// matching the rule's position are left implicit, as is the default severity.
pub fn format_rules(rules: &RuleSet) -> String {
    let mut out = String::new();
    for (i, rule) in rules.rules.iter().enumerate() {
        out.push_str(&format_rule(rule, i));
        out.push('\n');
    }
    out
}

fn format_rule(rule: &RiskRule, position: usize) -> String {
    let mut line = String::new();
    if rule.id != format!("r{}", position + 1) {
        line.push_str(&rule.id);
        line.push_str(": ");
    }
    line.push_str(&format_condition(&rule.condition));
    line.push_str(" -> ");
    line.push_str(&rule.problem);
    if rule.severity != Severity::default() {
        line.push_str(" @");
        line.push_str(rule.severity.as_str());
    }
    line
}

pub fn format_condition(cond: &Condition) -> String {
    match cond {
        Condition::Factor(id) => id.clone(),
        Condition::Predicate {
            factor,
            comparator,
            level,
        } => format!("{factor} {} {level}", comparator.as_str()),
        Condition::Not(inner) => match inner.as_ref() {
            Condition::Factor(_) | Condition::Predicate { .. } => {
                format!("!{}", format_condition(inner))
            }
            other => format!("!({})", format_condition(other)),
        },
        Condition::And(children) => children
            .iter()
            .map(|c| match c {
                Condition::And(_) | Condition::Or(_) => format!("({})", format_condition(c)),
                _ => format_condition(c),
            })
            .collect::<Vec<_>>()
            .join(" & "),
        Condition::Or(children) => children
            .iter()
            .map(|c| match c {
                Condition::Or(_) => format!("({})", format_condition(c)),
                _ => format_condition(c),
            })
            .collect::<Vec<_>>()
            .join(" | "),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_rules;

    #[test]
    fn barrier_rule_canonical_text() {
        let set = parse_rules(
            "(cultural_differences) & !(common_working_history) -> communication_problems",
        )
        .unwrap();
        assert_eq!(
            format_rules(&set),
            "cultural_differences & !common_working_history -> communication_problems\n"
        );
    }

    #[test]
    fn empty_set_formats_empty() {
        assert_eq!(format_rules(&RuleSet::default()), "");
    }

    #[test]
    fn nesting_keeps_needed_parens_only() {
        let text = "a & (b | c) | !(d & e) | (f | g) -> p\n";
        let set = parse_rules(text).unwrap();
        let formatted = format_rules(&set);
        assert_eq!(formatted, "a & (b | c) | !(d & e) | (f | g) -> p\n");
        assert_eq!(parse_rules(&formatted).unwrap(), set);

        let redundant = parse_rules("((a & b)) | (c) -> p").unwrap();
        assert_eq!(format_rules(&redundant), "a & b | c -> p\n");
    }

    #[test]
    fn explicit_ids_and_severity_survive() {
        let set = parse_rules("r3: a -> p @high\nb <= low -> q @low").unwrap();
        let formatted = format_rules(&set);
        assert_eq!(formatted, "r3: a -> p @high\nb <= low -> q @low\n");
        assert_eq!(parse_rules(&formatted).unwrap(), set);
    }
}
