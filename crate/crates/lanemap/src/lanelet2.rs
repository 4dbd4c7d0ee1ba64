//! The in-memory HD map mirroring Lanelet2 primitives and its OSM 0.6 XML
//! serialization.
//!
//! Maps hold points (nodes), linestrings (ways) and lanelets (relations).
//! [`export_osm`] is byte-deterministic: fixed attribute order, fixed
//! 9-decimal coordinate formatting, ids in ascending order, LF line endings.
//! [`parse_osm`] inverts it and preserves unknown tags verbatim, so manually
//! edited maps survive a re-export.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::xml::{escape, XmlEvent, XmlReader};

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{kind} {id}: referenced {what} {missing} does not exist")]
    DanglingReference {
        kind: &'static str,
        id: i64,
        what: &'static str,
        missing: i64,
    },
    #[error("duplicate id {0}")]
    DuplicateId(i64),
    #[error("id {0} is not positive")]
    NonPositiveId(i64),
    #[error("way {0} has fewer than 2 node references")]
    ShortWay(i64),
}

impl From<crate::xml::XmlError> for MapError {
    fn from(e: crate::xml::XmlError) -> Self {
        MapError::Parse {
            line: e.line,
            message: e.message,
        }
    }
}

/// Rounds a coordinate to the canonical 9-decimal grid used on disk, so a
/// value survives export -> parse bit-for-bit.
pub fn canonical_coord(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsmNode {
    pub id: i64,
    pub lat: f64,
    pub lon: f64,
    /// UTM metres, stored as `local_x` / `local_y` tags on disk.
    pub local_x: f64,
    pub local_y: f64,
    pub extra_tags: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsmWay {
    pub id: i64,
    pub node_refs: Vec<i64>,
    pub tags: Vec<(String, String)>,
}

impl OsmWay {
    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationMember {
    pub member_type: String,
    pub role: String,
    pub ref_id: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsmRelation {
    pub id: i64,
    pub members: Vec<RelationMember>,
    pub tags: Vec<(String, String)>,
}

impl OsmRelation {
    pub fn member(&self, role: &str) -> Option<i64> {
        self.members
            .iter()
            .find(|m| m.role == role)
            .map(|m| m.ref_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HdMap {
    pub nodes: Vec<OsmNode>,
    pub ways: Vec<OsmWay>,
    pub relations: Vec<OsmRelation>,
}

impl HdMap {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.ways.is_empty() && self.relations.is_empty()
    }

    pub fn node(&self, id: i64) -> Option<&OsmNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn way(&self, id: i64) -> Option<&OsmWay> {
        self.ways.iter().find(|w| w.id == id)
    }

    /// Ids unique and positive, references resolved, ways with >= 2 points.
    pub fn validate(&self) -> Result<(), MapError> {
        let mut seen = HashSet::new();
        for id in self
            .nodes
            .iter()
            .map(|n| n.id)
            .chain(self.ways.iter().map(|w| w.id))
            .chain(self.relations.iter().map(|r| r.id))
        {
            if id <= 0 {
                return Err(MapError::NonPositiveId(id));
            }
            if !seen.insert(id) {
                return Err(MapError::DuplicateId(id));
            }
        }
        let node_ids: HashSet<i64> = self.nodes.iter().map(|n| n.id).collect();
        let way_ids: HashSet<i64> = self.ways.iter().map(|w| w.id).collect();
        for way in &self.ways {
            if way.node_refs.len() < 2 {
                return Err(MapError::ShortWay(way.id));
            }
            for &r in &way.node_refs {
                if !node_ids.contains(&r) {
                    return Err(MapError::DanglingReference {
                        kind: "way",
                        id: way.id,
                        what: "node",
                        missing: r,
                    });
                }
            }
        }
        for rel in &self.relations {
            for m in &rel.members {
                if m.member_type == "way" && !way_ids.contains(&m.ref_id) {
                    return Err(MapError::DanglingReference {
                        kind: "relation",
                        id: rel.id,
                        what: "way",
                        missing: m.ref_id,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Incremental map assembly with a single ascending id counter shared by
/// nodes, ways and relations.
#[derive(Debug, Default)]
pub struct MapBuilder {
    map: HdMap,
    next_id: i64,
}

impl MapBuilder {
    pub fn new() -> Self {
        Self {
            map: HdMap::default(),
            next_id: 1,
        }
    }

    fn fresh_id(&mut self) -> i64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn add_node(&mut self, lat: f64, lon: f64, local_x: f64, local_y: f64) -> i64 {
        let id = self.fresh_id();
        self.map.nodes.push(OsmNode {
            id,
            lat: canonical_coord(lat),
            lon: canonical_coord(lon),
            local_x: canonical_coord(local_x),
            local_y: canonical_coord(local_y),
            extra_tags: Vec::new(),
        });
        id
    }

    pub fn add_way(&mut self, node_refs: Vec<i64>, tags: Vec<(String, String)>) -> i64 {
        let id = self.fresh_id();
        self.map.ways.push(OsmWay {
            id,
            node_refs,
            tags,
        });
        id
    }

    pub fn add_relation(
        &mut self,
        members: Vec<RelationMember>,
        tags: Vec<(String, String)>,
    ) -> i64 {
        let id = self.fresh_id();
        self.map.relations.push(OsmRelation { id, members, tags });
        id
    }

    pub fn finish(self) -> Result<HdMap, MapError> {
        self.map.validate()?;
        Ok(self.map)
    }
}

/// Serializes the map. Output is identical bytes for equal maps.
pub fn export_osm(map: &HdMap) -> Result<Vec<u8>, MapError> {
    map.validate()?;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<osm version=\"0.6\" generator=\"lanemap\">\n");

    let mut nodes: Vec<&OsmNode> = map.nodes.iter().collect();
    nodes.sort_by_key(|n| n.id);
    for node in nodes {
        writeln!(out, "  <node id=\"{}\" visible=\"true\" version=\"1\" lat=\"{:.9}\" lon=\"{:.9}\">",
            node.id, node.lat, node.lon
        )
        .unwrap();
        writeln!(out, "    <tag k=\"local_x\" v=\"{:.9}\"/>", node.local_x).unwrap();
        writeln!(out, "    <tag k=\"local_y\" v=\"{:.9}\"/>", node.local_y).unwrap();
        for (k, v) in &node.extra_tags {
            writeln!(out, "    <tag k=\"{}\" v=\"{}\"/>", escape(k), escape(v)).unwrap();
        }
        out.push_str("  </node>\n");
    }

    let mut ways: Vec<&OsmWay> = map.ways.iter().collect();
    ways.sort_by_key(|w| w.id);
    for way in ways {
        writeln!(out, "  <way id=\"{}\" visible=\"true\" version=\"1\">",
            way.id
        )
        .unwrap();
        for r in &way.node_refs {
            writeln!(out, "    <nd ref=\"{r}\"/>").unwrap();
        }
        for (k, v) in &way.tags {
            writeln!(out, "    <tag k=\"{}\" v=\"{}\"/>", escape(k), escape(v)).unwrap();
        }
        out.push_str("  </way>\n");
    }

    let mut relations: Vec<&OsmRelation> = map.relations.iter().collect();
    relations.sort_by_key(|r| r.id);
    for rel in relations {
        writeln!(out, "  <relation id=\"{}\" visible=\"true\" version=\"1\">",
            rel.id
        )
        .unwrap();
        for m in &rel.members {
            writeln!(out, "    <member type=\"{}\" role=\"{}\" ref=\"{}\"/>",
                escape(&m.member_type),
                escape(&m.role),
                m.ref_id
            )
            .unwrap();
        }
        for (k, v) in &rel.tags {
            writeln!(out, "    <tag k=\"{}\" v=\"{}\"/>", escape(k), escape(v)).unwrap();
        }
        out.push_str("  </relation>\n");
    }

    out.push_str("</osm>\n");
    Ok(out.into_bytes())
}

fn attr<'a>(
    attrs: &'a [(String, String)],
    key: &str,
    element: &str,
    line: usize,
) -> Result<&'a str, MapError> {
    attrs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| MapError::Parse {
            line,
            message: format!("<{element}> is missing attribute '{key}'"),
        })
}

fn parse_num<T: std::str::FromStr>(raw: &str, what: &str, line: usize) -> Result<T, MapError> {
    raw.parse().map_err(|_| MapError::Parse {
        line,
        message: format!("cannot parse {what} from '{raw}'"),
    })
}

/// Parses the OSM dialect back into an [`HdMap`]. Inverse of [`export_osm`]
/// on its image; unknown tags are kept verbatim.
pub fn parse_osm(xml: &[u8]) -> Result<HdMap, MapError> {
    let mut reader = XmlReader::new(xml);
    let mut map = HdMap::default();
    let mut saw_osm = false;
    let mut scope = Scope::Root;

    while let Some(event) = reader.next_event()? {
        match event {
            XmlEvent::Open {
                name,
                attrs,
                self_closing,
                line,
            } => match (&mut scope, name.as_str()) {
                (Scope::Root, "osm") => {
                    if saw_osm {
                        return Err(MapError::Parse {
                            line,
                            message: "second <osm> root".into(),
                        });
                    }
                    saw_osm = true;
                    if self_closing {
                        break;
                    }
                }
                (Scope::Root, "node") => {
                    let pending = PendingNode {
                        id: parse_num(attr(&attrs, "id", "node", line)?, "node id", line)?,
                        lat: parse_num(attr(&attrs, "lat", "node", line)?, "latitude", line)?,
                        lon: parse_num(attr(&attrs, "lon", "node", line)?, "longitude", line)?,
                        ..PendingNode::default()
                    };
                    if self_closing {
                        map.nodes.push(pending.into_node());
                    } else {
                        scope = Scope::Node(pending);
                    }
                }
                (Scope::Root, "way") => {
                    let way = OsmWay {
                        id: parse_num(attr(&attrs, "id", "way", line)?, "way id", line)?,
                        node_refs: Vec::new(),
                        tags: Vec::new(),
                    };
                    if self_closing {
                        map.ways.push(way);
                    } else {
                        scope = Scope::Way(way);
                    }
                }
                (Scope::Root, "relation") => {
                    let rel = OsmRelation {
                        id: parse_num(attr(&attrs, "id", "relation", line)?, "relation id", line)?,
                        members: Vec::new(),
                        tags: Vec::new(),
                    };
                    if self_closing {
                        map.relations.push(rel);
                    } else {
                        scope = Scope::Relation(rel);
                    }
                }
                (Scope::Node(pending), "tag") => {
                    let k = attr(&attrs, "k", "tag", line)?;
                    let v = attr(&attrs, "v", "tag", line)?;
                    match k {
                        "local_x" => pending.local_x = Some(parse_num(v, "local_x", line)?),
                        "local_y" => pending.local_y = Some(parse_num(v, "local_y", line)?),
                        _ => pending.extra_tags.push((k.to_string(), v.to_string())),
                    }
                    if !self_closing {
                        return Err(MapError::Parse {
                            line,
                            message: "<tag> must self-close".into(),
                        });
                    }
                }
                (Scope::Way(way), "nd") => {
                    way.node_refs.push(parse_num(
                        attr(&attrs, "ref", "nd", line)?,
                        "nd ref",
                        line,
                    )?);
                    if !self_closing {
                        return Err(MapError::Parse {
                            line,
                            message: "<nd> must self-close".into(),
                        });
                    }
                }
                (Scope::Way(way), "tag") => {
                    way.tags.push((
                        attr(&attrs, "k", "tag", line)?.to_string(),
                        attr(&attrs, "v", "tag", line)?.to_string(),
                    ));
                }
                (Scope::Relation(rel), "member") => {
                    rel.members.push(RelationMember {
                        member_type: attr(&attrs, "type", "member", line)?.to_string(),
                        role: attr(&attrs, "role", "member", line)?.to_string(),
                        ref_id: parse_num(
                            attr(&attrs, "ref", "member", line)?,
                            "member ref",
                            line,
                        )?,
                    });
                }
                (Scope::Relation(rel), "tag") => {
                    rel.tags.push((
                        attr(&attrs, "k", "tag", line)?.to_string(),
                        attr(&attrs, "v", "tag", line)?.to_string(),
                    ));
                }
                (_, other) => {
                    return Err(MapError::Parse {
                        line,
                        message: format!("unexpected element <{other}>"),
                    });
                }
            },
            XmlEvent::Close { name, line } => {
                scope = match (scope, name.as_str()) {
                    (Scope::Node(pending), "node") => {
                        map.nodes.push(pending.into_node());
                        Scope::Root
                    }
                    (Scope::Way(way), "way") => {
                        map.ways.push(way);
                        Scope::Root
                    }
                    (Scope::Relation(rel), "relation") => {
                        map.relations.push(rel);
                        Scope::Root
                    }
                    (Scope::Root, "osm") => break,
                    (_, other) => {
                        return Err(MapError::Parse {
                            line,
                            message: format!("unexpected closing tag </{other}>"),
                        });
                    }
                };
            }
        }
    }
    if !saw_osm {
        return Err(MapError::Parse {
            line: 1,
            message: "missing <osm> root element".into(),
        });
    }
    map.validate()?;
    Ok(map)
}

#[derive(Default)]
struct PendingNode {
    id: i64,
    lat: f64,
    lon: f64,
    local_x: Option<f64>,
    local_y: Option<f64>,
    extra_tags: Vec<(String, String)>,
}

impl PendingNode {
    fn into_node(self) -> OsmNode {
        OsmNode {
            id: self.id,
            lat: self.lat,
            lon: self.lon,
            local_x: self.local_x.unwrap_or(0.0),
            local_y: self.local_y.unwrap_or(0.0),
            extra_tags: self.extra_tags,
        }
    }
}

enum Scope {
    Root,
    Node(PendingNode),
    Way(OsmWay),
    Relation(OsmRelation),
}
