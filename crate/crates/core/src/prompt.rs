//! Prompt templates and assembly.
//!
//! A template body carries `[context]` and `[question]` placeholders. The
//! instruction block (everything before the first line starting with
//! `Contexts:` or `Query:`) becomes the system message; the rest is the user
//! message.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const CONTEXT_PLACEHOLDER: &str = "[context]";
pub const QUESTION_PLACEHOLDER: &str = "[question]";

/// Separator between retrieved items inside `[context]`.
pub const ITEM_SEPARATOR: &str = "\n";

const NO_RETRIEVAL_BODY: &str = "You are a helpful assistant. Answer the question as concisely as possible, \
using only the specific phrase, entity, or number that directly answers the question. Within five words.
Query: [question]
Short Answer:";

const NQ_BODY: &str = "You are a knowledgeable assistant tasked with answering questions based on the \
Natural Questions dataset. Each question is accompanied by contexts extracted from Wikipedia. Answer the \
question by providing only the specific phrase, entity, or number that directly answers the question. \
Within five words.

Contexts: [context]

Query: [question]

Short Answer:";

const HOTPOTQA_BODY: &str = "You are a knowledgeable assistant tasked with answering questions based on \
the HotPotQA dataset. Each question is accompanied by contexts extracted from Wikipedia. Answer the \
question as concisely as possible, using only the specific phrase, entity, or number that directly answers \
the question. Within five words.

Contexts: [context]

Query: [question]

Short Answer:";

const MSMARCO_BODY: &str = "You are a knowledgeable assistant tasked with answering questions based on the \
MS-marco dataset. Answer the question given the information in those contexts. Answer the question in a \
single, brief sentence.

Contexts: [context]

Query: [question]

Answer:";

/// Names accepted by [`PromptTemplate::builtin`].
pub const BUILTIN_TEMPLATES: &[&str] = &["none", "nq", "hotpotqa", "msmarco"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateKind {
    /// Uses retrieved contexts; needs both placeholders.
    Rag,
    /// Question only; must not reference `[context]`.
    NoRetrieval,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub body: String,
    pub kind: TemplateKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembledPrompt {
    pub system: String,
    pub user: String,
    /// The whole prompt as one string.
    pub text: String,
}

impl PromptTemplate {
    /// Parses a template body; the kind follows from whether `[context]`
    /// appears.
    pub fn parse(name: impl Into<String>, body: impl Into<String>) -> Result<Self> {
        let body = body.into();
        let kind = if body.contains(CONTEXT_PLACEHOLDER) {
            TemplateKind::Rag
        } else {
            TemplateKind::NoRetrieval
        };
        Self::with_kind(name, body, kind)
    }

    pub fn with_kind(name: impl Into<String>, body: impl Into<String>, kind: TemplateKind) -> Result<Self> {
        let t = Self {
            name: name.into(),
            body: body.into(),
            kind,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let (body, kind) = match name {
            "none" => (NO_RETRIEVAL_BODY, TemplateKind::NoRetrieval),
            "nq" => (NQ_BODY, TemplateKind::Rag),
            "hotpotqa" => (HOTPOTQA_BODY, TemplateKind::Rag),
            "msmarco" => (MSMARCO_BODY, TemplateKind::Rag),
            other => {
                return Err(Error::Template(format!(
                    "unknown template {other:?}; expected one of {BUILTIN_TEMPLATES:?}"
                )))
            }
        };
        Self::with_kind(name, body, kind)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.body.contains(QUESTION_PLACEHOLDER) {
            return Err(Error::Template(format!("{}: missing {QUESTION_PLACEHOLDER}", self.name)));
        }
        match (self.kind, self.body.contains(CONTEXT_PLACEHOLDER)) {
            (TemplateKind::Rag, false) => Err(Error::Template(format!(
                "{}: missing {CONTEXT_PLACEHOLDER}",
                self.name
            ))),
            (TemplateKind::NoRetrieval, true) => Err(Error::Template(format!(
                "{}: no-retrieval template must not use {CONTEXT_PLACEHOLDER}",
                self.name
            ))),
            _ => Ok(()),
        }
    }

    /// Fills the placeholders in one pass, so text inside the question or the
    /// items is never re-expanded. No-retrieval templates ignore `items`.
    pub fn assemble<S: AsRef<str>>(&self, question: &str, items: &[S]) -> Result<AssembledPrompt> {
        self.validate()?;
        let context = items.iter().map(AsRef::as_ref).collect::<Vec<&str>>().join(ITEM_SEPARATOR);
        let mut text = String::with_capacity(self.body.len() + context.len() + question.len());
        let mut rest = self.body.as_str();
        loop {
            let next_ctx = rest.find(CONTEXT_PLACEHOLDER);
            let next_q = rest.find(QUESTION_PLACEHOLDER);
            let (pos, placeholder, value) = match (next_ctx, next_q) {
                (None, None) => break,
                (Some(c), Some(q)) if c < q => (c, CONTEXT_PLACEHOLDER, context.as_str()),
                (Some(c), None) => (c, CONTEXT_PLACEHOLDER, context.as_str()),
                (_, Some(q)) => (q, QUESTION_PLACEHOLDER, question),
            };
            text.push_str(&rest[..pos]);
            text.push_str(value);
            rest = &rest[pos + placeholder.len()..];
        }
        text.push_str(rest);

        let (system, user) = split_system_user(&text);
        Ok(AssembledPrompt {
            system: String::from(system),
            user: String::from(user),
            text,
        })
    }
}

fn split_system_user(text: &str) -> (&str, &str) {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.starts_with("Contexts:") || line.starts_with("Query:") {
            return (text[..offset].trim_end(), &text[offset..]);
        }
        offset += line.len();
    }
    ("", text)
}

/// Free-function form of [`PromptTemplate::assemble`].
pub fn assemble_prompt<S: AsRef<str>>(template: &PromptTemplate, question: &str, items: &[S]) -> Result<AssembledPrompt> {
    template.assemble(question, items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid() {
        for name in BUILTIN_TEMPLATES {
            let t = PromptTemplate::builtin(name).unwrap();
            assert_eq!(t.kind == TemplateKind::Rag, *name != "none");
        }
        assert!(PromptTemplate::builtin("bogus").is_err());
    }

    #[test]
    fn empty_items_leave_valid_prompt() {
        let t = PromptTemplate::builtin("nq").unwrap();
        let p = t.assemble::<&str>("who?", &[]).unwrap();
        assert!(p.text.contains("Contexts: \n"));
        assert!(!p.text.contains(CONTEXT_PLACEHOLDER));
        assert!(!p.text.contains(QUESTION_PLACEHOLDER));
        assert!(p.text.contains("Query: who?"));
    }

    #[test]
    fn items_become_ordered_lines() {
        let t = PromptTemplate::builtin("hotpotqa").unwrap();
        let p = t.assemble("q?", &["first.", "second.", "third."]).unwrap();
        assert!(p.text.contains("Contexts: first.\nsecond.\nthird.\n\nQuery: q?"));
        assert!(p.system.starts_with("You are a knowledgeable assistant"));
        assert!(p.system.ends_with("Within five words."));
        assert!(p.user.starts_with("Contexts: first."));
        assert!(p.user.ends_with("Short Answer:"));
    }

    #[test]
    fn no_retrieval_ignores_items() {
        let t = PromptTemplate::builtin("none").unwrap();
        let a = t.assemble("capital of France?", &["Paris is big."]).unwrap();
        let b = t.assemble::<&str>("capital of France?", &[]).unwrap();
        assert_eq!(a, b);
        assert!(!a.text.contains("Paris"));
        assert!(a.system.starts_with("You are a helpful assistant."));
        assert_eq!(a.user, "Query: capital of France?\nShort Answer:");
    }

    #[test]
    fn missing_placeholders_are_rejected() {
        assert!(matches!(PromptTemplate::parse("x", "no placeholders"), Err(Error::Template(_))));
        assert!(matches!(
            PromptTemplate::with_kind("x", "Query: [question]", TemplateKind::Rag),
            Err(Error::Template(_))
        ));
        assert!(matches!(
            PromptTemplate::with_kind("x", "[context] [question]", TemplateKind::NoRetrieval),
            Err(Error::Template(_))
        ));
        assert_eq!(PromptTemplate::parse("x", "Query: [question]").unwrap().kind, TemplateKind::NoRetrieval);
    }

    #[test]
    fn substituted_text_is_not_reexpanded() {
        let t = PromptTemplate::parse("x", "Contexts: [context]\nQuery: [question]").unwrap();
        let p = t.assemble("what is [context]?", &["see [question]"]).unwrap();
        assert_eq!(p.text, "Contexts: see [question]\nQuery: what is [context]?");
        assert_eq!(p.system, "");
    }

    #[test]
    fn assembly_is_deterministic() {
        let t = PromptTemplate::builtin("msmarco").unwrap();
        let a = assemble_prompt(&t, "q", &["a", "b"]).unwrap();
        let b = assemble_prompt(&t, "q", &["a", "b"]).unwrap();
        assert_eq!(a.text.as_bytes(), b.text.as_bytes());
        assert!(a.user.ends_with("\n\nAnswer:"));
    }
}
