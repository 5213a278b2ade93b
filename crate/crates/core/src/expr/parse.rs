use std::collections::BTreeSet;

use super::grammar::Grammar;
use super::logic::{Attribute, LogicForm};
use super::vocab::Role;
use crate::error::{ForgeError, Result};

type Tokens<'a> = [(String, &'a [Role])];

#[derive(Clone, Debug, PartialEq)]
struct NounPhrase {
    noun: String,
    atts: BTreeSet<Attribute>,
}

fn has(toks: &Tokens, pos: usize, pred: impl Fn(&Role) -> bool) -> bool {
    toks.get(pos).is_some_and(|(_, roles)| roles.iter().any(pred))
}

fn attr_at(toks: &Tokens, pos: usize) -> Option<Attribute> {
    toks.get(pos)?.1.iter().find_map(|r| match r {
        Role::Attr(a) => Some(a.clone()),
        _ => None,
    })
}

/// Every way to read a separated attribute list starting at `pos`
/// (`a`, `a and b`, `a, b and c`, `a, b, and c`, `a b`). Includes the empty
/// list when `allow_empty`.
fn attr_lists(toks: &Tokens, pos: usize, allow_empty: bool) -> Vec<(Vec<Attribute>, usize)> {
    let mut out = Vec::new();
    if allow_empty {
        out.push((Vec::new(), pos));
    }
    let Some(first) = attr_at(toks, pos) else {
        return out;
    };
    let mut list = vec![first];
    let mut end = pos + 1;
    out.push((list.clone(), end));
    loop {
        let mut next = end;
        if has(toks, next, |r| *r == Role::Comma) {
            next += 1;
        }
        if has(toks, next, |r| *r == Role::And) {
            next += 1;
        }
        match attr_at(toks, next) {
            Some(a) => {
                list.push(a);
                end = next + 1;
                out.push((list.clone(), end));
            }
            None => break,
        }
    }
    out
}

/// `the/a [attrs] noun [which is attrs] [with the color clothes]`
fn noun_phrases(toks: &Tokens, pos: usize) -> Vec<(NounPhrase, usize)> {
    if !has(toks, pos, |r| *r == Role::Article) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (prefix, at_noun) in attr_lists(toks, pos + 1, true) {
        let Some(noun) = toks.get(at_noun).and_then(|(_, roles)| {
            roles.iter().find_map(|r| match r {
                Role::Noun(n) => Some(n.clone()),
                _ => None,
            })
        }) else {
            continue;
        };
        let mut heads = vec![(prefix.clone(), at_noun + 1)];
        if has(toks, at_noun + 1, |r| *r == Role::Pronoun) {
            for (clause, end) in attr_lists(toks, at_noun + 2, false) {
                heads.push(([prefix.clone(), clause].concat(), end));
            }
        }
        for (atts, end) in heads {
            let np = |extra: &[Attribute]| NounPhrase {
                noun: noun.clone(),
                atts: atts.iter().chain(extra).cloned().collect(),
            };
            out.push((np(&[]), end));
            if has(toks, end, |r| *r == Role::OutfitPrep) {
                let mut outfit = Vec::new();
                let mut k = end + 1;
                while let Some(a) = attr_at(toks, k) {
                    outfit.push(a);
                    k += 1;
                    out.push((np(&outfit), k));
                }
            }
        }
    }
    out
}

impl Grammar {
    /// Parses text produced by the expression templates back into its logic
    /// form. Nouns are mapped to canonical categories.
    pub fn parse(&self, text: &str) -> Result<LogicForm> {
        let toks = self.lexicon().tokenize(text)?;
        let unparsable = |reason: &str| ForgeError::UnparsableExpression {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        if toks.is_empty() {
            return Err(unparsable("empty text"));
        }
        let n = toks.len();
        let mut found: Vec<LogicForm> = Vec::new();
        let mut push = |form: LogicForm| {
            if !found.contains(&form) {
                found.push(form);
            }
        };

        if n == 1 {
            for role in toks[0].1 {
                if let Role::Noun(noun) = role {
                    push(LogicForm::keyword(noun.clone()));
                }
            }
        }
        for (np, end) in noun_phrases(&toks, 0) {
            if end == n {
                push(LogicForm::basic(np.noun.clone(), np.atts.clone()));
                continue;
            }
            for role in toks[end].1 {
                match *role {
                    Role::AbsRel(rel) => {
                        let mut k = end + 1;
                        if has(&toks, k, |r| *r == Role::Article) {
                            k += 1;
                        }
                        if k + 1 == n && has(&toks, k, |r| *r == Role::ImageNoun) {
                            push(LogicForm::absolute(np.noun.clone(), np.atts.clone(), rel));
                        }
                    }
                    Role::RelRel(rel) => {
                        for (other, other_end) in noun_phrases(&toks, end + 1) {
                            if other_end == n {
                                push(LogicForm::relative(
                                    np.noun.clone(),
                                    np.atts.clone(),
                                    rel,
                                    other.noun,
                                    other.atts,
                                ));
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        match found.len() {
            0 => Err(unparsable("no template matches")),
            1 => Ok(found.pop().expect("one parse")),
            _ => Err(ForgeError::AmbiguousParse(text.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{AgeGroup, Gender};
    use crate::compose::Relation;

    fn color(c: &str) -> Attribute {
        Attribute::Color(c.into())
    }

    #[test]
    fn relative_example() {
        let g = Grammar::default();
        let l = g
            .parse("the flower which is lightpink at the right side of the cat which is dimgray and non-transparent")
            .unwrap();
        assert_eq!(
            l,
            LogicForm::relative(
                "flower",
                BTreeSet::from([color("lightpink")]),
                Relation::Right,
                "cat",
                BTreeSet::from([color("dimgray"), Attribute::Transparent(false)]),
            )
        );
    }

    #[test]
    fn absolute_example_canonicalizes_synonym() {
        let g = Grammar::default();
        let l = g
            .parse("the plant which is lightpink and salient at the rightmost edge of the picture")
            .unwrap();
        assert_eq!(
            l,
            LogicForm::absolute(
                "flower",
                BTreeSet::from([color("lightpink"), Attribute::Salient(true)]),
                Relation::Right
            )
        );
    }

    #[test]
    fn basic_and_keyword() {
        let g = Grammar::default();
        assert_eq!(
            g.parse("the lightpink and salient flower").unwrap(),
            LogicForm::basic("flower", BTreeSet::from([color("lightpink"), Attribute::Salient(true)]))
        );
        assert_eq!(g.parse("cat").unwrap(), LogicForm::keyword("cat"));
        assert_eq!(g.parse("teddy bear").unwrap(), LogicForm::keyword("teddy bear"));
        assert_eq!(g.parse("Cat").unwrap(), LogicForm::keyword("cat"));
    }

    #[test]
    fn human_outfit_forms() {
        let g = Grammar::default();
        let want = LogicForm::basic(
            "human",
            BTreeSet::from([
                Attribute::Gender(Gender::Female),
                Attribute::Age(AgeGroup::Adult),
                Attribute::Transparent(false),
                Attribute::Salient(true),
                color("crimson"),
                Attribute::Clothes("print".into()),
            ]),
        );
        for prep in ["with the", "wearing the", "in the", "who is dressed in"] {
            let text = format!("the female, adult, non-transparent and salient woman {prep} crimson print");
            assert_eq!(g.parse(&text).unwrap(), want, "{text}");
        }
        let l = g
            .parse("the woman in the crimson print on the left side of the rosybrown and salient dog")
            .unwrap();
        assert_eq!(l.rel, Some(Relation::Left));
        assert_eq!(l.obj0, "human");
        assert_eq!(l.obj1.as_deref(), Some("dog"));
    }

    #[test]
    fn beside_and_shared_phrases() {
        let g = Grammar::default();
        let l = g.parse("a red cat near the dog").unwrap();
        assert_eq!(l.rel, Some(Relation::Beside));
        let l = g.parse("the cat on top of the image").unwrap();
        assert_eq!((l.rel, l.abs), (Some(Relation::Top), true));
        let l = g.parse("the cat on top of the dog").unwrap();
        assert_eq!((l.rel, l.abs), (Some(Relation::Top), false));
        let l = g.parse("the cat in the middle of the photo").unwrap();
        assert_eq!(l.rel, Some(Relation::Middle));
    }

    #[test]
    fn rejects_bad_text() {
        let g = Grammar::default();
        for text in [
            "the frobnicating cat",
            "",
            "red",
            "the cat the dog",
            "cat dog",
            "the cat in the middle of the dog",
        ] {
            assert!(
                matches!(g.parse(text), Err(ForgeError::UnparsableExpression { .. })),
                "{text:?}"
            );
        }
    }
}
