//! Test support: seeded generators for graphs and command sequences, the
//! replay and reference-scan oracles, and the scripted fixture graphs.
//!
//! Everything here goes through the public engine API only.

use essencery_core::graph::{Card, Command, EditSession, ElementId, Graph, NodeKind, Point};
use essencery_core::kernel::{AreaKey, KernelCategory, KernelPath};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as Rng8;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const TEXTS: &[&str] = &[
    "",
    "Requirements",
    "Työviikko",
    "Vecka å ä ö",
    "Ærøskøbing",
    "Søren's \"quoted\" name",
    "back\\slash",
    "two\nlines",
    "日本語のテキスト",
    "emoji 🚀 launch",
    "tab\tseparated",
    "  padded  ",
    "<b>&amp;</b>",
    "Sprint Backlog",
    "Daily Stand-up",
    "#not a comment",
];

const ALPHABET: &[char] = &[
    'a', 'b', 'z', 'A', 'Q', '0', '9', ' ', '_', '-', 'å', 'ä', 'ö', 'Æ', 'ø', 'ß', 'é', 'λ', 'ж',
    '中', '🙂', '"', '\\', '\n', '\t', '#', '{', '}', '(', ')', ';', ':', '.',
];

const LINKS: &[&str] = &[
    "https://semat.org/essence-1.1",
    "https://example.org/practices/scrum?x=1&y=2",
    "http://localhost:8080/assets/index.html",
    "mailto:team@example.org",
    "https://en.wikipedia.org/wiki/Työ",
];

/// Arbitrary UTF-8 text, biased towards interesting cases.
pub fn random_text(rng: &mut impl Rng) -> String {
    if rng.gen_bool(0.6) {
        TEXTS.choose(rng).unwrap().to_string()
    } else {
        let len = rng.gen_range(0..12);
        (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
    }
}

fn random_label(rng: &mut impl Rng) -> Option<String> {
    rng.gen_bool(0.6).then(|| random_text(rng))
}

pub fn random_kind(rng: &mut impl Rng) -> NodeKind {
    *NodeKind::ALL.choose(rng).unwrap()
}

fn random_area(rng: &mut impl Rng) -> Option<AreaKey> {
    if rng.gen_bool(0.3) {
        None
    } else {
        Some(*AreaKey::ALL.choose(rng).unwrap())
    }
}

fn random_point(rng: &mut impl Rng) -> Point {
    Point::new(rng.gen_range(-2000..=2000), rng.gen_range(-2000..=2000))
}

pub fn random_card(rng: &mut impl Rng) -> Card {
    Card {
        description: if rng.gen_bool(0.7) {
            random_text(rng)
        } else {
            String::new()
        },
        items: (0..rng.gen_range(0..4)).map(|_| random_text(rng)).collect(),
        links: (0..rng.gen_range(0..3))
            .map(|_| LINKS.choose(rng).unwrap().to_string())
            .collect(),
    }
}

/// A kernel path, mostly resolvable in the standard kernel.
pub fn random_kernel_path(rng: &mut impl Rng) -> KernelPath {
    const KNOWN: &[(KernelCategory, &str)] = &[
        (KernelCategory::Alpha, "Work"),
        (KernelCategory::Alpha, "Team"),
        (KernelCategory::Alpha, "Requirements"),
        (KernelCategory::Alpha, "WayOfWorking"),
        (KernelCategory::Space, "ShapeTheSystem"),
        (KernelCategory::Space, "TrackProgress"),
        (KernelCategory::Competency, "Development"),
        (KernelCategory::Competency, "Leadership"),
        (KernelCategory::Alpha, "Nonexistent"),
    ];
    let (c, n) = *KNOWN.choose(rng).unwrap();
    KernelPath::new(c, n)
}

#[derive(Debug, Clone, Copy)]
pub struct GraphLimits {
    pub max_nodes: usize,
    pub max_notes: usize,
    pub max_relations: usize,
    pub max_cards: usize,
}

impl Default for GraphLimits {
    fn default() -> Self {
        GraphLimits {
            max_nodes: 50,
            max_notes: 10,
            max_relations: 100,
            max_cards: 20,
        }
    }
}

fn id(s: &str) -> ElementId {
    ElementId::new(s).expect("valid id")
}

/// A random graph built only through engine commands.
pub fn random_graph(rng: &mut impl Rng, limits: GraphLimits) -> Graph {
    let mut s = EditSession::from_graph(Graph::new(
        format!("{:08x}", rng.gen::<u32>()),
        random_text(rng),
    ));
    let nodes = rng.gen_range(0..=limits.max_nodes);
    // Shuffled ids so insertion order differs from canonical order.
    let mut node_ids: Vec<String> = (1..=nodes).map(|i| format!("n{i}")).collect();
    node_ids.shuffle(rng);
    for nid in &node_ids {
        s.apply(Command::AddNode {
            id: id(nid),
            kind: random_kind(rng),
            name: random_text(rng),
            position: random_point(rng),
            area: random_area(rng),
        })
        .expect("fresh node");
    }
    for i in 1..=rng.gen_range(0..=limits.max_notes) {
        s.apply(Command::AddNote {
            id: id(&format!("t{i}")),
            text: random_text(rng),
            position: random_point(rng),
        })
        .expect("fresh note");
    }
    if !node_ids.is_empty() {
        for i in 1..=rng.gen_range(0..=limits.max_relations) {
            s.apply(Command::AddRelation {
                id: id(&format!("r{i}")),
                source: id(node_ids.choose(rng).unwrap()),
                target: id(node_ids.choose(rng).unwrap()),
                label: random_label(rng),
                directed: rng.gen_bool(0.8),
            })
            .expect("endpoints exist");
        }
        let cards = rng.gen_range(0..=limits.max_cards.min(node_ids.len()));
        for owner in node_ids.choose_multiple(rng, cards) {
            s.apply(Command::SetCard {
                owner: id(owner),
                card: random_card(rng),
            })
            .expect("valid card");
        }
        let binds = rng.gen_range(0..=node_ids.len() / 2);
        for owner in node_ids.choose_multiple(rng, binds) {
            s.apply(Command::SetBinding {
                owner: id(owner),
                target: random_kernel_path(rng),
            })
            .expect("owner exists");
        }
    }
    s.into_graph()
}

fn pick<'a>(rng: &mut impl Rng, ids: &'a [ElementId]) -> Option<&'a ElementId> {
    ids.choose(rng)
}

/// A random command against `graph`. Roughly one in ten targets an unknown
/// or already-taken id, so rejections get exercised too.
pub fn random_command(rng: &mut impl Rng, graph: &Graph, max_nodes: usize) -> Command {
    let nodes: Vec<ElementId> = graph.nodes().map(|n| n.id.clone()).collect();
    let notes: Vec<ElementId> = graph.notes().map(|n| n.id.clone()).collect();
    let rels: Vec<ElementId> = graph.relations().map(|r| r.id.clone()).collect();
    let bogus = rng.gen_bool(0.1);
    let unknown = id("zz_missing");
    let existing_node = |rng: &mut _| -> ElementId {
        if bogus {
            unknown.clone()
        } else {
            pick(rng, &nodes)
                .cloned()
                .unwrap_or_else(|| unknown.clone())
        }
    };
    let fresh = |rng: &mut _, prefix: &str| -> ElementId {
        if bogus {
            if let Some(taken) = pick(rng, &nodes) {
                return taken.clone();
            }
        }
        graph.fresh_id(prefix)
    };

    let choice = rng.gen_range(0..15);
    match choice {
        0 if nodes.len() < max_nodes => Command::AddNode {
            id: fresh(rng, "n"),
            kind: random_kind(rng),
            name: random_text(rng),
            position: random_point(rng),
            area: random_area(rng),
        },
        0 | 1 => Command::RemoveNode {
            id: existing_node(rng),
        },
        2 => Command::RenameNode {
            id: existing_node(rng),
            name: random_text(rng),
        },
        3 => {
            let mut ids: Vec<ElementId> = nodes
                .iter()
                .chain(notes.iter())
                .filter(|_| rng.gen_bool(0.3))
                .cloned()
                .collect();
            if bogus {
                ids.push(unknown.clone());
            }
            Command::MoveNodes {
                ids: ids.into_iter().collect(),
                delta: Point::new(rng.gen_range(-300..=300), rng.gen_range(-300..=300)),
            }
        }
        4 => Command::SetKind {
            id: existing_node(rng),
            kind: random_kind(rng),
        },
        5 | 6 => Command::AddRelation {
            id: fresh(rng, "r"),
            source: existing_node(rng),
            target: existing_node(rng),
            label: random_label(rng),
            directed: rng.gen_bool(0.7),
        },
        7 => Command::RemoveRelation {
            id: pick(rng, &rels).cloned().unwrap_or_else(|| unknown.clone()),
        },
        8 => Command::SetRelationLabel {
            id: pick(rng, &rels).cloned().unwrap_or_else(|| unknown.clone()),
            label: random_label(rng),
        },
        9 => Command::AddNote {
            id: fresh(rng, "t"),
            text: random_text(rng),
            position: random_point(rng),
        },
        10 => {
            let target = pick(rng, &notes)
                .cloned()
                .unwrap_or_else(|| unknown.clone());
            if rng.gen_bool(0.5) {
                Command::SetNoteText {
                    id: target,
                    text: random_text(rng),
                }
            } else {
                Command::RemoveNote { id: target }
            }
        }
        11 => Command::SetCard {
            owner: existing_node(rng),
            card: random_card(rng),
        },
        12 => Command::RemoveCard {
            owner: existing_node(rng),
        },
        13 => Command::SetBinding {
            owner: existing_node(rng),
            target: random_kernel_path(rng),
        },
        _ => Command::RemoveBinding {
            owner: existing_node(rng),
        },
    }
}

/// Outcome of driving a session with random commands.
pub struct Run {
    pub initial: Graph,
    /// Commands the session accepted, in order.
    pub accepted: Vec<Command>,
    pub rejected: usize,
    pub session: EditSession,
}

/// Starts from a random graph of at most `max_nodes` nodes and feeds `len`
/// random commands. Every rejected command is checked for atomicity: graph
/// and both stack depths unchanged.
pub fn random_run(rng: &mut impl Rng, len: usize, max_nodes: usize) -> Run {
    let limits = GraphLimits {
        max_nodes: max_nodes / 2,
        max_notes: 4,
        max_relations: max_nodes,
        max_cards: 10,
    };
    let initial = random_graph(rng, limits);
    let mut session = EditSession::from_graph(initial.clone());
    let mut accepted = Vec::new();
    let mut rejected = 0;
    for _ in 0..len {
        let cmd = random_command(rng, session.graph(), max_nodes);
        let before = session.graph().clone();
        let depths = (session.undo_depth(), session.redo_depth());
        match session.apply(cmd.clone()) {
            Ok(()) => accepted.push(cmd),
            Err(e) => {
                assert_eq!(
                    session.graph(),
                    &before,
                    "rejected {cmd:?} ({e}) mutated the graph"
                );
                assert_eq!(
                    (session.undo_depth(), session.redo_depth()),
                    depths,
                    "rejected {cmd:?} touched the stacks"
                );
                rejected += 1;
            }
        }
    }
    Run {
        initial,
        accepted,
        rejected,
        session,
    }
}

/// Replay oracle: applies the command log to a fresh session from scratch.
pub fn replay(initial: &Graph, log: &[Command]) -> Graph {
    let mut s = EditSession::from_graph(initial.clone());
    for cmd in log {
        s.apply(cmd.clone()).expect("logged command replays");
    }
    s.into_graph()
}

/// Exhaustive reference scan: every relation endpoint, card owner and
/// binding owner must name an existing node, and no id may be shared
/// between nodes, notes and relations. Returns a description of each
/// violation.
pub fn dangling_references(graph: &Graph) -> Vec<String> {
    let node_ids: Vec<&str> = graph.nodes().map(|n| n.id.as_str()).collect();
    let is_node = |s: &str| node_ids.contains(&s);
    let mut out = Vec::new();
    for r in graph.relations() {
        for end in [&r.source, &r.target] {
            if !is_node(end.as_str()) {
                out.push(format!("relation {} -> missing {end}", r.id));
            }
        }
    }
    for (owner, _) in graph.cards() {
        if !is_node(owner.as_str()) {
            out.push(format!("card owner {owner} missing"));
        }
    }
    for b in graph.bindings() {
        if !is_node(b.owner.as_str()) {
            out.push(format!("binding owner {} missing", b.owner));
        }
    }
    let mut all: Vec<&str> = node_ids.clone();
    all.extend(graph.notes().map(|t| t.id.as_str()));
    all.extend(graph.relations().map(|r| r.id.as_str()));
    all.sort_unstable();
    for w in all.windows(2) {
        if w[0] == w[1] {
            out.push(format!("id {} shared", w[0]));
        }
    }
    out
}

/// "One week of project work": the practice a team followed during one week,
/// essentialized into 12 nodes and 14 relations, built by commands.
pub fn one_week_fixture() -> Graph {
    use NodeKind::*;
    let mut s = EditSession::from_graph(Graph::new("7e3a91c0", "One week of project work"));
    type NodeRow = (
        &'static str,
        NodeKind,
        &'static str,
        i64,
        i64,
        Option<AreaKey>,
    );
    let nodes: &[NodeRow] = &[
        ("n1", Alpha, "Stakeholders", 0, 0, Some(AreaKey::Customer)),
        ("n2", Alpha, "Requirements", 240, 0, Some(AreaKey::Solution)),
        (
            "n3",
            Alpha,
            "Software System",
            480,
            0,
            Some(AreaKey::Solution),
        ),
        ("n4", Alpha, "Työ", 720, 0, Some(AreaKey::Endeavor)),
        (
            "n5",
            ActivitySpace,
            "Understand the Requirements",
            240,
            160,
            Some(AreaKey::Solution),
        ),
        (
            "n6",
            ActivitySpace,
            "Coordinate Activity",
            720,
            160,
            Some(AreaKey::Endeavor),
        ),
        (
            "n7",
            Activity,
            "Weekly planning",
            720,
            320,
            Some(AreaKey::Endeavor),
        ),
        (
            "n8",
            Activity,
            "Write user stories",
            240,
            320,
            Some(AreaKey::Solution),
        ),
        (
            "n9",
            Activity,
            "Implement features",
            480,
            320,
            Some(AreaKey::Solution),
        ),
        ("n10", WorkProduct, "Product backlog", 240, 480, None),
        (
            "n11",
            Competency,
            "Development",
            480,
            480,
            Some(AreaKey::Solution),
        ),
        ("n12", Pattern, "Scrum master", 720, 480, None),
    ];
    for &(nid, kind, name, x, y, area) in nodes {
        s.apply(Command::AddNode {
            id: id(nid),
            kind,
            name: name.into(),
            position: Point::new(x, y),
            area,
        })
        .unwrap();
    }
    let rels: &[(&str, &str, &str, Option<&str>, bool)] = &[
        ("r1", "n1", "n2", Some("express"), true),
        ("r2", "n2", "n3", Some("scope"), true),
        ("r3", "n4", "n3", Some("produces"), true),
        ("r4", "n5", "n2", None, true),
        ("r5", "n6", "n4", None, true),
        ("r6", "n8", "n5", Some("refines"), true),
        ("r7", "n7", "n6", Some("refines"), true),
        ("r8", "n9", "n3", Some("builds"), true),
        ("r9", "n8", "n10", Some("fills"), true),
        ("r10", "n7", "n10", Some("orders"), true),
        ("r11", "n9", "n11", Some("requires"), true),
        ("r12", "n12", "n7", Some("facilitates"), true),
        ("r13", "n8", "n9", None, false),
        ("r14", "n9", "n9", Some("iterate"), true),
    ];
    for &(rid, a, b, label, directed) in rels {
        s.apply(Command::AddRelation {
            id: id(rid),
            source: id(a),
            target: id(b),
            label: label.map(str::to_owned),
            directed,
        })
        .unwrap();
    }
    s.apply(Command::AddNote {
        id: id("t1"),
        text: "Week 3\nsprint review on Friday".into(),
        position: Point::new(0, 320),
    })
    .unwrap();
    s.apply(Command::SetCard {
        owner: id("n7"),
        card: Card {
            description: "Team agrees the goals of the week".into(),
            items: vec![
                "Backlog ordered".into(),
                "Capacity known".into(),
                "Goal written down".into(),
            ],
            links: vec!["https://semat.org/essence-1.1".into()],
        },
    })
    .unwrap();
    for (owner, path) in [
        ("n1", "kernel.alpha.Stakeholders"),
        ("n2", "kernel.alpha.Requirements"),
        ("n3", "kernel.alpha.SoftwareSystem"),
        ("n4", "kernel.alpha.Work"),
        ("n5", "kernel.space.UnderstandTheRequirements"),
        ("n6", "kernel.space.CoordinateActivity"),
        ("n11", "kernel.competency.Development"),
    ] {
        s.apply(Command::SetBinding {
            owner: id(owner),
            target: path.parse().unwrap(),
        })
        .unwrap();
    }
    s.into_graph()
}

/// Minimal blocking HTTP/1.1 client for driving a spawned server.
pub mod http {
    use std::io::{self, Read, Write};
    use std::net::{SocketAddr, TcpStream};
    use std::time::Duration;

    #[derive(Debug)]
    pub struct Reply {
        pub status: u16,
        pub headers: Vec<(String, String)>,
        pub body: Vec<u8>,
    }

    impl Reply {
        pub fn header(&self, name: &str) -> Option<&str> {
            self.headers
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(name))
                .map(|(_, v)| v.as_str())
        }

        pub fn text(&self) -> String {
            String::from_utf8_lossy(&self.body).into_owned()
        }
    }

    /// Sends one request with `Connection: close` and reads the whole reply.
    pub fn request(
        addr: SocketAddr,
        method: &str,
        path: &str,
        headers: &[(&str, &str)],
        body: &[u8],
    ) -> io::Result<Reply> {
        let mut stream = TcpStream::connect_timeout(&addr, Duration::from_secs(2))?;
        stream.set_read_timeout(Some(Duration::from_secs(5)))?;
        let mut head = format!(
            "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Length: {}\r\n",
            body.len()
        );
        for (k, v) in headers {
            head.push_str(&format!("{k}: {v}\r\n"));
        }
        head.push_str("\r\n");
        stream.write_all(head.as_bytes())?;
        stream.write_all(body)?;
        let mut raw = Vec::new();
        stream.read_to_end(&mut raw)?;
        parse_reply(&raw)
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "malformed reply"))
    }

    fn parse_reply(raw: &[u8]) -> Option<Reply> {
        let split = raw.windows(4).position(|w| w == b"\r\n\r\n")?;
        let head = std::str::from_utf8(&raw[..split]).ok()?;
        let mut lines = head.split("\r\n");
        let status = lines.next()?.split(' ').nth(1)?.parse().ok()?;
        let headers: Vec<(String, String)> = lines
            .filter_map(|l| l.split_once(':'))
            .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
            .collect();
        let mut body = raw[split + 4..].to_vec();
        let chunked = headers
            .iter()
            .any(|(k, v)| k.eq_ignore_ascii_case("transfer-encoding") && v.contains("chunked"));
        if chunked {
            body = dechunk(&body)?;
        }
        Some(Reply {
            status,
            headers,
            body,
        })
    }

    fn dechunk(mut data: &[u8]) -> Option<Vec<u8>> {
        let mut out = Vec::new();
        loop {
            let line_end = data.windows(2).position(|w| w == b"\r\n")?;
            let size =
                usize::from_str_radix(std::str::from_utf8(&data[..line_end]).ok()?.trim(), 16)
                    .ok()?;
            data = &data[line_end + 2..];
            if size == 0 {
                return Some(out);
            }
            out.extend_from_slice(data.get(..size)?);
            data = data.get(size + 2..)?;
        }
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn plain_and_chunked_replies() {
            let r =
                parse_reply(b"HTTP/1.1 201 Created\r\nContent-Length: 2\r\nETag: \"0\"\r\n\r\nok")
                    .unwrap();
            assert_eq!(
                (r.status, r.text().as_str(), r.header("etag")),
                (201, "ok", Some("\"0\""))
            );
            let r = parse_reply(b"HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\n3\r\nabc\r\n2\r\nde\r\n0\r\n\r\n").unwrap();
            assert_eq!(r.text(), "abcde");
        }
    }
}
