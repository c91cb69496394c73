use std::collections::HashSet;

use crate::graph::{
    is_element_id, Card, ElementId, Graph, Node, NodeKind, Point, Relation, TextNote,
};
use crate::kernel::{is_element_name, AreaKey, KernelCategory, KernelPath};
use crate::syntax::{unexpected, ParseError, Pos, Token, TokenStream};

struct RelStmt {
    rel: Relation,
    source_pos: Pos,
    target_pos: Pos,
}

struct OwnedStmt<T> {
    owner: ElementId,
    owner_pos: Pos,
    value: T,
}

/// Parses a `.ess` document. Referential problems (a relation to a missing
/// node, two cards on one node, ...) are parse errors, so a successful parse
/// always yields a graph that satisfies every invariant. When the text has
/// several problems the earliest one is reported.
pub fn parse(text: &str) -> Result<Graph, ParseError> {
    let mut p = Parser {
        ts: TokenStream::new(text),
        ids: HashSet::new(),
    };
    p.document()
}

struct Parser<'a> {
    ts: TokenStream<'a>,
    ids: HashSet<ElementId>,
}

impl<'a> Parser<'a> {
    fn document(&mut self) -> Result<Graph, ParseError> {
        self.ts.keyword("graph")?;
        let (title, _) = self.ts.string()?;
        self.ts.expect(Token::LBrace)?;
        let (id, revision) = self.meta()?;
        let mut graph = Graph::new(id, title);
        graph.revision = revision;

        let mut rels = Vec::new();
        let mut cards = Vec::new();
        let mut binds = Vec::new();
        loop {
            let tok = self.ts.next()?;
            let Token::Ident(kw) = &tok.token else {
                if tok.token == Token::RBrace {
                    break;
                }
                return Err(unexpected(&tok, "statement or `}`"));
            };
            match kw.as_str() {
                "node" => graph.insert_node(self.node()?),
                "note" => graph.insert_note(self.note()?),
                "rel" => rels.push(self.rel()?),
                "card" => cards.push(self.card()?),
                "bind" => binds.push(self.bind()?),
                _ => {
                    return Err(unexpected(
                        &tok,
                        "`node`, `note`, `rel`, `card`, `bind` or `}`",
                    ))
                }
            }
        }
        let tok = self.ts.next()?;
        if tok.token != Token::Eof {
            return Err(unexpected(&tok, "end of input"));
        }

        let mut errors = Vec::new();
        let not_a_node = |pos: Pos, id: &ElementId, what: &str| {
            ParseError::new(pos, format!("{what} `{id}` is not a node in this graph"))
        };
        for r in rels {
            if graph.node(r.rel.source.as_str()).is_none() {
                errors.push(not_a_node(r.source_pos, &r.rel.source, "relation endpoint"));
            } else if graph.node(r.rel.target.as_str()).is_none() {
                errors.push(not_a_node(r.target_pos, &r.rel.target, "relation endpoint"));
            } else {
                graph.insert_relation(r.rel);
            }
        }
        for c in cards {
            if graph.node(c.owner.as_str()).is_none() {
                errors.push(not_a_node(c.owner_pos, &c.owner, "card owner"));
            } else if graph.card(c.owner.as_str()).is_some() {
                errors.push(ParseError::new(
                    c.owner_pos,
                    format!("second card for `{}`", c.owner),
                ));
            } else {
                graph.insert_card(c.owner, c.value);
            }
        }
        for b in binds {
            if graph.node(b.owner.as_str()).is_none() {
                errors.push(not_a_node(b.owner_pos, &b.owner, "binding owner"));
            } else if graph.binding(b.owner.as_str()).is_some() {
                errors.push(ParseError::new(
                    b.owner_pos,
                    format!("second binding for `{}`", b.owner),
                ));
            } else {
                graph.insert_binding(b.owner, b.value);
            }
        }
        match errors.into_iter().min_by_key(|e| (e.line, e.column)) {
            Some(e) => Err(e),
            None => Ok(graph),
        }
    }

    fn meta(&mut self) -> Result<(String, u64), ParseError> {
        self.ts.keyword("meta")?;
        self.ts.expect(Token::LBrace)?;
        self.ts.keyword("id")?;
        self.ts.expect(Token::Colon)?;
        let (id, _) = self.ts.string()?;
        self.ts.expect(Token::Semi)?;
        self.ts.keyword("revision")?;
        self.ts.expect(Token::Colon)?;
        let (revision, pos) = self.ts.int()?;
        let revision = u64::try_from(revision)
            .map_err(|_| ParseError::new(pos, "revision must not be negative"))?;
        self.ts.expect(Token::Semi)?;
        self.ts.expect(Token::RBrace)?;
        Ok((id, revision))
    }

    /// An element id; `fresh` ids must not be taken yet and are claimed.
    fn id(&mut self, fresh: bool) -> Result<(ElementId, Pos), ParseError> {
        let (raw, pos) = self.ts.ident("element id")?;
        if !is_element_id(&raw) {
            return Err(ParseError::expected(
                pos,
                format!("`{raw}` is not a valid element id"),
                "lowercase id such as n1",
            ));
        }
        let id = ElementId::new(raw).expect("checked");
        if fresh && !self.ids.insert(id.clone()) {
            return Err(ParseError::new(pos, format!("duplicate id `{id}`")));
        }
        Ok((id, pos))
    }

    fn position(&mut self) -> Result<Point, ParseError> {
        self.ts.keyword("at")?;
        self.ts.expect(Token::LParen)?;
        let (x, x_pos) = self.ts.int()?;
        self.ts.expect(Token::Comma)?;
        let (y, y_pos) = self.ts.int()?;
        self.ts.expect(Token::RParen)?;
        for (v, pos) in [(x, x_pos), (y, y_pos)] {
            if !Point::new(v, 0).in_bounds() {
                return Err(ParseError::new(
                    pos,
                    format!("coordinate {v} is outside the canvas"),
                ));
            }
        }
        Ok(Point::new(x, y))
    }

    fn node(&mut self) -> Result<Node, ParseError> {
        let (id, _) = self.id(true)?;
        let (kind, kind_pos) = self.ts.ident("node kind")?;
        let kind: NodeKind = kind.parse().map_err(|e: String| {
            ParseError::expected(
                kind_pos,
                e,
                "alpha, activity_space, activity, work_product, competency or pattern",
            )
        })?;
        let (name, _) = self.ts.string()?;
        let position = self.position()?;
        let area =
            if self.ts.peek_is_keyword("area")? {
                self.ts.next()?;
                let (area, area_pos) = self.ts.ident("area")?;
                Some(area.parse::<AreaKey>().map_err(|e| {
                    ParseError::expected(area_pos, e, "customer, solution or endeavor")
                })?)
            } else {
                None
            };
        Ok(Node {
            id,
            kind,
            name,
            position,
            area,
        })
    }

    fn note(&mut self) -> Result<TextNote, ParseError> {
        let (id, _) = self.id(true)?;
        let (text, _) = self.ts.string()?;
        let position = self.position()?;
        Ok(TextNote { id, text, position })
    }

    fn rel(&mut self) -> Result<RelStmt, ParseError> {
        let (id, _) = self.id(true)?;
        let (source, source_pos) = self.id(false)?;
        let tok = self.ts.next()?;
        let directed = match tok.token {
            Token::Arrow => true,
            Token::DashDash => false,
            _ => return Err(unexpected(&tok, "`->` or `--`")),
        };
        let (target, target_pos) = self.id(false)?;
        let label = if matches!(self.ts.peek()?.token, Token::Str(_)) {
            Some(self.ts.string()?.0)
        } else {
            None
        };
        Ok(RelStmt {
            rel: Relation {
                id,
                source,
                target,
                label,
                directed,
            },
            source_pos,
            target_pos,
        })
    }

    fn card(&mut self) -> Result<OwnedStmt<Card>, ParseError> {
        let (owner, owner_pos) = self.id(false)?;
        self.ts.expect(Token::LBrace)?;
        let mut card = Card::default();
        if self.ts.peek_is_keyword("desc")? {
            self.ts.next()?;
            card.description = self.ts.string()?.0;
        }
        while self.ts.peek_is_keyword("item")? {
            self.ts.next()?;
            card.items.push(self.ts.string()?.0);
        }
        while self.ts.peek_is_keyword("link")? {
            self.ts.next()?;
            let (link, pos) = self.ts.string()?;
            if let Err(e) = url::Url::parse(&link) {
                return Err(ParseError::new(
                    pos,
                    format!("link `{link}` is not an absolute URL: {e}"),
                ));
            }
            card.links.push(link);
        }
        let tok = self.ts.next()?;
        if tok.token != Token::RBrace {
            return Err(unexpected(
                &tok,
                "`desc`, `item`, `link` or `}` (in that order)",
            ));
        }
        Ok(OwnedStmt {
            owner,
            owner_pos,
            value: card,
        })
    }

    fn bind(&mut self) -> Result<OwnedStmt<KernelPath>, ParseError> {
        let (owner, owner_pos) = self.id(false)?;
        self.ts.keyword("kernel")?;
        self.ts.expect(Token::Dot)?;
        let (category, cat_pos) = self.ts.ident("kernel category")?;
        let category: KernelCategory = category
            .parse()
            .map_err(|e: String| ParseError::expected(cat_pos, e, "alpha, space or competency"))?;
        self.ts.expect(Token::Dot)?;
        let (name, name_pos) = self.ts.ident("kernel element name")?;
        if !is_element_name(&name) {
            return Err(ParseError::new(
                name_pos,
                format!("`{name}` is not a kernel element name"),
            ));
        }
        Ok(OwnedStmt {
            owner,
            owner_pos,
            value: KernelPath::new(category, name),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::essfmt::print;

    const HEAD: &str = "graph \"G\" {\n  meta { id: \"g1\"; revision: 0; }\n";

    fn doc(body: &str) -> String {
        format!("{HEAD}{body}}}\n")
    }

    fn err_at(text: &str) -> (usize, usize, String) {
        let e = parse(text).unwrap_err();
        (e.line, e.column, e.message)
    }

    #[test]
    fn empty_graph() {
        let g = parse("graph \"Empty\" {\n  meta { id: \"g1\"; revision: 0; }\n}\n").unwrap();
        assert_eq!(g.title, "Empty");
        assert_eq!(g.id, "g1");
        assert_eq!(g.nodes().len(), 0);
    }

    #[test]
    fn full_statement_set() {
        let text = doc(concat!(
            "  node n1 alpha \"Työ\" at (-5, 10) area endeavor\n",
            "  node n2 activity \"Plan\" at (0, 0)\n",
            "  note t1 \"two\\nlines\" at (1, 1)\n",
            "  rel r1 n2 -> n1 \"uses\"\n",
            "  rel r2 n1 -- n1\n",
            "  card n1 { desc \"d\" item \"a\" item \"b\" link \"https://semat.org/\" }\n",
            "  card n2 {}\n",
            "  bind n1 kernel.alpha.Work\n",
        ));
        let g = parse(&text).unwrap();
        let n1 = g.node("n1").unwrap();
        assert_eq!(
            (n1.name.as_str(), n1.position, n1.area),
            ("Työ", Point::new(-5, 10), Some(AreaKey::Endeavor))
        );
        assert_eq!(g.note("t1").unwrap().text, "two\nlines");
        assert!(!g.relation("r2").unwrap().directed);
        assert_eq!(g.relation("r1").unwrap().label.as_deref(), Some("uses"));
        assert_eq!(g.card("n1").unwrap().items, ["a", "b"]);
        assert!(g.card("n2").unwrap().is_empty());
        assert_eq!(g.binding("n1").unwrap().to_string(), "kernel.alpha.Work");
        assert_eq!(print(&g), text);
    }

    #[test]
    fn relation_to_missing_node_names_it() {
        let text = doc("  node n1 alpha \"A\" at (0, 0)\n  rel r1 n1 -> n9 \"uses\"\n");
        let (line, col, msg) = err_at(&text);
        assert_eq!((line, col), (4, 16));
        assert!(msg.contains("n9"), "{msg}");
    }

    #[test]
    fn forward_references_are_fine() {
        let text = doc("  rel r1 n1 -> n2\n  bind n1 kernel.alpha.Team\n  node n2 alpha \"B\" at (0, 0)\n  node n1 alpha \"A\" at (0, 0)\n");
        assert!(parse(&text).is_ok());
    }

    #[test]
    fn duplicate_ids_across_statement_kinds() {
        let text = doc("  node n1 alpha \"A\" at (0, 0)\n  note n1 \"x\" at (0, 0)\n");
        let (line, col, _) = err_at(&text);
        assert_eq!((line, col), (4, 8));
    }

    #[test]
    fn earliest_referential_error_wins() {
        let text = doc("  bind n7 kernel.alpha.Team\n  rel r1 n8 -> n9\n");
        let (line, _, msg) = err_at(&text);
        assert_eq!(line, 3);
        assert!(msg.contains("n7"));
    }

    #[test]
    fn second_card_rejected() {
        let text = doc("  node n1 alpha \"A\" at (0, 0)\n  card n1 {}\n  card n1 {}\n");
        assert_eq!(err_at(&text).0, 5);
    }

    #[test]
    fn card_sections_must_be_ordered() {
        let text = doc("  node n1 alpha \"A\" at (0, 0)\n  card n1 { item \"a\" desc \"d\" }\n");
        assert_eq!(err_at(&text).0, 4);
    }

    #[test]
    fn relative_link_rejected() {
        let text = doc("  node n1 alpha \"A\" at (0, 0)\n  card n1 { link \"docs/x.html\" }\n");
        let (line, col, _) = err_at(&text);
        assert_eq!((line, col), (4, 18));
    }

    #[test]
    fn unknown_kind_and_area() {
        assert_eq!(err_at(&doc("  node n1 role \"A\" at (0, 0)\n")).0, 3);
        assert_eq!(
            err_at(&doc("  node n1 alpha \"A\" at (0, 0) area market\n")).1,
            36
        );
    }

    #[test]
    fn uppercase_id_rejected() {
        assert_eq!(err_at(&doc("  node N1 alpha \"A\" at (0, 0)\n")).1, 8);
    }

    #[test]
    fn coordinates_bounded() {
        assert!(parse(&doc("  node n1 alpha \"A\" at (100000, -100000)\n")).is_ok());
        assert_eq!(err_at(&doc("  node n1 alpha \"A\" at (0, 100001)\n")).1, 28);
    }

    #[test]
    fn negative_revision_rejected() {
        assert!(parse("graph \"G\" { meta { id: \"g\"; revision: -1; } }").is_err());
    }

    #[test]
    fn trailing_garbage_rejected() {
        let text = format!("{}x", doc(""));
        assert_eq!(err_at(&text).0, 4);
    }

    #[test]
    fn empty_input() {
        let (line, col, _) = err_at("");
        assert_eq!((line, col), (1, 1));
    }

    #[test]
    fn crlf_input_accepted() {
        let text = doc("  node n1 alpha \"A\" at (0, 0)\n").replace('\n', "\r\n");
        let g = parse(&text).unwrap();
        assert_eq!(g.nodes().len(), 1);
        assert!(!print(&g).contains('\r'));
    }

    #[test]
    fn bad_binding_category() {
        let (line, col, _) = err_at(&doc(
            "  node n1 alpha \"A\" at (0, 0)\n  bind n1 kernel.role.Work\n",
        ));
        assert_eq!((line, col), (4, 18));
    }
}
