//! Parser for `[Canonical|surface]` entity annotations.

use std::fmt;
use std::ops::Range;

/// One annotated entity mention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    /// Single-word entity name from the left side of the span, e.g. `Barack_Obama`.
    pub canonical_name: String,
    /// The text as it appeared in the sentence, e.g. `Obama`.
    pub surface_form: String,
    /// Byte range of `canonical_name` inside [`AnnotatedSentence::text`].
    pub span: Range<usize>,
}

/// A corpus line with every annotation span replaced by its canonical name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub raw_text: String,
    /// `raw_text` after replacement.
    pub text: String,
    pub mentions: Vec<Mention>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationErrorKind {
    Unclosed,
    Nested,
    MissingSeparator,
    ExtraSeparator,
    EmptyCanonical,
    EmptySurface,
    WhitespaceInCanonical,
}

/// A malformed annotation span. `offset` is the byte offset of the opening `[`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationError {
    pub offset: usize,
    pub kind: AnnotationErrorKind,
}

impl fmt::Display for AnnotationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            AnnotationErrorKind::Unclosed => "unclosed annotation",
            AnnotationErrorKind::Nested => "nested '[' inside annotation",
            AnnotationErrorKind::MissingSeparator => "annotation without '|'",
            AnnotationErrorKind::ExtraSeparator => "annotation with more than one '|'",
            AnnotationErrorKind::EmptyCanonical => "empty canonical name",
            AnnotationErrorKind::EmptySurface => "empty surface form",
            AnnotationErrorKind::WhitespaceInCanonical => "whitespace in canonical name",
        };
        write!(f, "{what} at byte {}", self.offset)
    }
}

impl std::error::Error for AnnotationError {}

/// Parses one corpus line.
///
/// A stray `]` or `|` outside any span is ordinary text. Nested or escaped
/// brackets are not part of the grammar and are rejected.
pub fn parse_annotated_sentence(line: &str) -> Result<AnnotatedSentence, AnnotationError> {
    let mut text = String::with_capacity(line.len());
    let mut mentions = Vec::new();
    let mut rest = line;
    let mut consumed = 0;

    while let Some(open) = rest.find('[') {
        text.push_str(&rest[..open]);
        let offset = consumed + open;
        let body_and_tail = &rest[open + 1..];
        let err = |kind| AnnotationError { offset, kind };

        let close = body_and_tail
            .find(']')
            .ok_or(err(AnnotationErrorKind::Unclosed))?;
        let body = &body_and_tail[..close];
        if body.contains('[') {
            return Err(err(AnnotationErrorKind::Nested));
        }
        let (canonical, surface) = body
            .split_once('|')
            .ok_or(err(AnnotationErrorKind::MissingSeparator))?;
        if surface.contains('|') {
            return Err(err(AnnotationErrorKind::ExtraSeparator));
        }
        if canonical.is_empty() {
            return Err(err(AnnotationErrorKind::EmptyCanonical));
        }
        if surface.is_empty() {
            return Err(err(AnnotationErrorKind::EmptySurface));
        }
        if canonical.chars().any(char::is_whitespace) {
            return Err(err(AnnotationErrorKind::WhitespaceInCanonical));
        }

        let start = text.len();
        text.push_str(canonical);
        mentions.push(Mention {
            canonical_name: canonical.to_owned(),
            surface_form: surface.to_owned(),
            span: start..text.len(),
        });

        let advance = open + 1 + close + 1;
        consumed += advance;
        rest = &rest[advance..];
    }
    text.push_str(rest);

    Ok(AnnotatedSentence {
        raw_text: line.to_owned(),
        text,
        mentions,
    })
}

impl AnnotatedSentence {
    /// Restores the `[X|Y]` spans, reproducing the original line.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.raw_text.len());
        let mut cursor = 0;
        for m in &self.mentions {
            out.push_str(&self.text[cursor..m.span.start]);
            out.push('[');
            out.push_str(&m.canonical_name);
            out.push('|');
            out.push_str(&m.surface_form);
            out.push(']');
            cursor = m.span.end;
        }
        out.push_str(&self.text[cursor..]);
        out
    }

    /// Alternating plain-text and entity pieces of `text`, in order.
    pub(crate) fn segments(&self) -> impl Iterator<Item = Segment<'_>> {
        let mut pieces = Vec::with_capacity(self.mentions.len() * 2 + 1);
        let mut cursor = 0;
        for m in &self.mentions {
            if cursor < m.span.start {
                pieces.push(Segment::Text(&self.text[cursor..m.span.start]));
            }
            pieces.push(Segment::Entity(&self.text[m.span.clone()]));
            cursor = m.span.end;
        }
        if cursor < self.text.len() {
            pieces.push(Segment::Text(&self.text[cursor..]));
        }
        pieces.into_iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Segment<'a> {
    Text(&'a str),
    Entity(&'a str),
}
