//! Error-tolerant HTML parsing. Phishing kits ship broken markup on purpose
//! and by accident, so the goal is never to reject input: unclosed tags are
//! recovered, stray end tags ignored, and the result is always normalized to
//! a single `html` root with `head`/`body` synthesized when implied.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Element {
    pub tag: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Node {
    Element(Element),
    Text(String),
}

impl Element {
    fn new(tag: &str) -> Element {
        Element {
            tag: tag.to_owned(),
            attrs: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug)]
pub(crate) struct Document {
    pub roots: Vec<Node>,
    /// Whether any start tag appeared at all; distinguishes "only text" from
    /// "nothing recoverable".
    pub saw_element: bool,
}

const VOID_TAGS: [&str; 14] = [
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

/// Elements whose content is raw text up to the matching close tag.
const RAW_TEXT_TAGS: [&str; 4] = ["script", "style", "textarea", "title"];

/// Tags that belong in `head` when they appear before any body content.
const HEAD_TAGS: [&str; 6] = ["title", "meta", "link", "base", "style", "script"];

pub(crate) fn is_void(tag: &str) -> bool {
    VOID_TAGS.contains(&tag)
}

struct StartTag {
    name: String,
    attrs: Vec<(String, String)>,
    self_closing: bool,
}

enum Token {
    Start(StartTag),
    End(String),
    Text(String),
}

fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | b'\x0c')
}

/// Byte-offset find of an ASCII needle, ignoring ASCII case. Offsets stay
/// valid for slicing `haystack` (lowercasing a copy would shift them for
/// multi-byte content).
fn find_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.is_empty() || h.len() < n.len() {
        return if n.is_empty() { Some(0) } else { None };
    }
    (0..=h.len() - n.len()).find(|&k| h[k..k + n.len()].eq_ignore_ascii_case(n))
}

/// Decode the handful of entities that matter for keyword matching. Unknown
/// entities pass through verbatim.
fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_owned();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let semi = rest[..rest.len().min(12)].find(';');
        let replaced = semi.and_then(|end| {
            let entity = &rest[1..end];
            let ch = match entity {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                _ => {
                    let num = entity.strip_prefix('#')?;
                    let code = match num.strip_prefix(['x', 'X']) {
                        Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                        None => num.parse::<u32>().ok()?,
                    };
                    char::from_u32(code)
                }
            }?;
            Some((ch, end + 1))
        });
        match replaced {
            Some((ch, consumed)) => {
                out.push(ch);
                rest = &rest[consumed..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn tokenize(input: &str) -> Vec<Token> {
    let b = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut text_start = 0;

    let flush_text = |tokens: &mut Vec<Token>, from: usize, to: usize| {
        if from < to {
            let text = &input[from..to];
            if !text.trim().is_empty() {
                tokens.push(Token::Text(decode_entities(text)));
            }
        }
    };

    while i < b.len() {
        if b[i] != b'<' || i + 1 >= b.len() {
            i += 1;
            continue;
        }
        let next = b[i + 1];
        if next == b'!' {
            flush_text(&mut tokens, text_start, i);
            if input[i..].starts_with("<!--") {
                i = match input[i + 4..].find("-->") {
                    Some(p) => i + 4 + p + 3,
                    None => b.len(),
                };
            } else {
                // doctype, CDATA and friends: skip to the closing bracket
                i = match input[i..].find('>') {
                    Some(p) => i + p + 1,
                    None => b.len(),
                };
            }
            text_start = i;
        } else if next == b'?' {
            flush_text(&mut tokens, text_start, i);
            i = match input[i..].find('>') {
                Some(p) => i + p + 1,
                None => b.len(),
            };
            text_start = i;
        } else if next == b'/' {
            flush_text(&mut tokens, text_start, i);
            let mut j = i + 2;
            let name_start = j;
            while j < b.len() && (b[j].is_ascii_alphanumeric() || b[j] == b'-') {
                j += 1;
            }
            let name = input[name_start..j].to_lowercase();
            i = match input[j..].find('>') {
                Some(p) => j + p + 1,
                None => b.len(),
            };
            if !name.is_empty() {
                tokens.push(Token::End(name));
            }
            text_start = i;
        } else if next.is_ascii_alphabetic() {
            flush_text(&mut tokens, text_start, i);
            let (tag, after) = read_start_tag(input, i);
            i = after;
            text_start = i;
            let raw_text = !tag.self_closing && RAW_TEXT_TAGS.contains(&tag.name.as_str());
            let raw_name = tag.name.clone();
            tokens.push(Token::Start(tag));
            if raw_text {
                // Consume everything up to the matching close tag verbatim;
                // '<' inside scripts and styles is ordinary content.
                let close = format!("</{raw_name}");
                match find_ascii_ci(&input[i..], &close) {
                    Some(p) => {
                        if p > 0 && !input[i..i + p].trim().is_empty() {
                            tokens.push(Token::Text(input[i..i + p].to_owned()));
                        }
                        let end_at = i + p;
                        i = match input[end_at..].find('>') {
                            Some(q) => end_at + q + 1,
                            None => b.len(),
                        };
                        tokens.push(Token::End(raw_name));
                    }
                    None => {
                        if !input[i..].trim().is_empty() {
                            tokens.push(Token::Text(input[i..].to_owned()));
                        }
                        i = b.len();
                        tokens.push(Token::End(raw_name));
                    }
                }
                text_start = i;
            }
        } else {
            // literal '<' in text
            i += 1;
        }
    }
    flush_text(&mut tokens, text_start, b.len());
    tokens
}

/// Parse a start tag beginning at `at` (which points at '<'). Returns the tag
/// and the byte index just past it. Never fails: EOF mid-tag just ends it.
fn read_start_tag(input: &str, at: usize) -> (StartTag, usize) {
    let b = input.as_bytes();
    let mut j = at + 1;
    let name_start = j;
    while j < b.len() && (b[j].is_ascii_alphanumeric() || b[j] == b'-') {
        j += 1;
    }
    let name = input[name_start..j].to_lowercase();
    let mut attrs: Vec<(String, String)> = Vec::new();
    let mut self_closing = false;
    loop {
        while j < b.len() && is_ws(b[j]) {
            j += 1;
        }
        if j >= b.len() {
            break;
        }
        if b[j] == b'>' {
            j += 1;
            break;
        }
        if b[j] == b'/' {
            if j + 1 < b.len() && b[j + 1] == b'>' {
                self_closing = true;
                j += 2;
                break;
            }
            j += 1;
            continue;
        }
        // attribute name
        let an_start = j;
        while j < b.len() && !is_ws(b[j]) && !matches!(b[j], b'=' | b'>' | b'/') {
            j += 1;
        }
        if an_start == j {
            j += 1; // junk byte (stray quote etc.)
            continue;
        }
        let attr_name = input[an_start..j].to_lowercase();
        while j < b.len() && is_ws(b[j]) {
            j += 1;
        }
        let mut value = String::new();
        if j < b.len() && b[j] == b'=' {
            j += 1;
            while j < b.len() && is_ws(b[j]) {
                j += 1;
            }
            if j < b.len() && (b[j] == b'"' || b[j] == b'\'') {
                let quote = b[j];
                j += 1;
                let v_start = j;
                while j < b.len() && b[j] != quote {
                    j += 1;
                }
                value = decode_entities(&input[v_start..j]);
                if j < b.len() {
                    j += 1; // past the closing quote
                }
            } else {
                let v_start = j;
                while j < b.len() && !is_ws(b[j]) && b[j] != b'>' {
                    j += 1;
                }
                value = decode_entities(&input[v_start..j]);
            }
        }
        attrs.push((attr_name, value));
    }
    (
        StartTag {
            name,
            attrs,
            self_closing,
        },
        j,
    )
}

fn attach(stack: &mut [Element], roots: &mut Vec<Node>, node: Node) {
    match stack.last_mut() {
        Some(parent) => parent.children.push(node),
        None => roots.push(node),
    }
}

pub(crate) fn parse_document(input: &str) -> Document {
    let mut roots: Vec<Node> = Vec::new();
    let mut stack: Vec<Element> = Vec::new();
    let mut saw_element = false;
    for token in tokenize(input) {
        match token {
            Token::Text(t) => attach(&mut stack, &mut roots, Node::Text(t)),
            Token::Start(st) => {
                if st.name.is_empty() {
                    continue;
                }
                saw_element = true;
                let el = Element {
                    tag: st.name,
                    attrs: st.attrs,
                    children: Vec::new(),
                };
                if st.self_closing || is_void(&el.tag) {
                    attach(&mut stack, &mut roots, Node::Element(el));
                } else {
                    stack.push(el);
                }
            }
            Token::End(name) => {
                // Close up to the nearest matching open element; a stray end
                // tag with no match is dropped.
                if let Some(pos) = stack.iter().rposition(|e| e.tag == name) {
                    while stack.len() > pos {
                        let closed = stack.pop().expect("stack len checked");
                        attach(&mut stack, &mut roots, Node::Element(closed));
                    }
                }
            }
        }
    }
    while let Some(unclosed) = stack.pop() {
        attach(&mut stack, &mut roots, Node::Element(unclosed));
    }
    Document { roots, saw_element }
}

/// Normalize a parsed forest to a single `html` element with `head` and
/// `body` children, mirroring how a browser recovers fragment input. Returns
/// `None` when there is nothing to build a tree from.
pub(crate) fn normalize(doc: Document) -> Option<Element> {
    if doc.roots.is_empty() {
        return None;
    }
    let mut html = Element::new("html");
    let children = match (doc.roots.len(), doc.roots) {
        (1, mut roots) => match roots.pop().expect("one root") {
            Node::Element(e) if e.tag == "html" => {
                html.attrs = e.attrs;
                e.children
            }
            other => vec![other],
        },
        (_, roots) => roots,
    };

    let mut head = Element::new("head");
    let mut body = Element::new("body");
    let mut explicit_head = false;
    let mut explicit_body = false;
    let mut body_started = false;
    for child in children {
        match child {
            Node::Element(e) if e.tag == "head" && !body_started => {
                if !explicit_head {
                    head.attrs = e.attrs;
                }
                explicit_head = true;
                head.children.extend(e.children);
            }
            Node::Element(e) if e.tag == "body" => {
                if !explicit_body {
                    body.attrs = e.attrs;
                }
                explicit_body = true;
                body_started = true;
                body.children.extend(e.children);
            }
            Node::Element(e) if !body_started && HEAD_TAGS.contains(&e.tag.as_str()) => {
                head.children.push(Node::Element(e));
            }
            other => {
                body_started = true;
                body.children.push(other);
            }
        }
    }
    if explicit_head || !head.children.is_empty() {
        html.children.push(Node::Element(head));
    }
    if explicit_body || !body.children.is_empty() {
        html.children.push(Node::Element(body));
    }
    if !doc.saw_element && html.children.is_empty() {
        return None;
    }
    Some(html)
}
