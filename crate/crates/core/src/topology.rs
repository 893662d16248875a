//! Operator cell topology: legitimate cells, the handover graph, and
//! per-collector expected views.
//!
//! The expected view answers "which cells could a UE near this collector
//! legitimately observe": cells within N+1 hops on the handover graph,
//! keyed by frequency so a PCI allowed on one carrier is never accepted
//! on another.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::model::{
    BandIndicator, CellIdentity, Cgi, Plmn, RatType, ARFCN_MAX, EARFCN_MAX, PCI_MAX,
};

/// Normative header of the topology CSV schema.
pub const TOPOLOGY_CSV_HEADER: &str =
    "cell_uid,rat,mcc,mnc,pci,earfcn,arfcn,band,ncc,bcc,tac_lac,cell_identity,lat,lon,ho_neighbors";

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("header mismatch: expected `{TOPOLOGY_CSV_HEADER}`, got `{found}`")]
    HeaderMismatch { found: String },
    #[error("row at line {line}: {message}")]
    RowParse { line: u64, message: String },
    #[error("duplicate cell uid `{0}`")]
    DuplicateCellUid(String),
    #[error("unknown cell `{0}`")]
    UnknownCell(String),
}

/// A handover reference to a cell uid that does not exist in the file.
/// Collected as a warning rather than failing the load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DanglingNeighbor {
    pub from: String,
    pub to: String,
}

impl fmt::Display for DanglingNeighbor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cell `{}` lists unknown neighbor `{}`",
            self.from, self.to
        )
    }
}

/// One legitimate cell from the operator's topology export.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyCell {
    pub cell_uid: String,
    pub identity: CellIdentity,
    pub plmn: Plmn,
    pub tac_or_lac: u16,
    /// Parsed and stored but unused by neighbor expansion.
    pub location: Option<(f64, f64)>,
    pub ho_neighbors: Vec<String>,
}

/// The loaded topology with its symmetrized handover graph.
#[derive(Debug, Clone, Default)]
pub struct CellTopology {
    cells: BTreeMap<String, TopologyCell>,
    /// Symmetric adjacency: an edge exists if either side listed it.
    adjacency: BTreeMap<String, BTreeSet<String>>,
    /// (earfcn, pci) -> uids, for resolving E-UTRA collectors.
    eutra_index: BTreeMap<(u32, u16), BTreeSet<String>>,
}

impl CellTopology {
    /// Build from cells, symmetrizing handover relations and collecting
    /// dangling references.
    pub fn from_cells(
        cells: Vec<TopologyCell>,
    ) -> Result<(CellTopology, Vec<DanglingNeighbor>), TopologyError> {
        let mut topo = CellTopology::default();
        for cell in cells {
            if topo.cells.contains_key(&cell.cell_uid) {
                return Err(TopologyError::DuplicateCellUid(cell.cell_uid));
            }
            topo.adjacency.entry(cell.cell_uid.clone()).or_default();
            if let CellIdentity::Eutra { pci, earfcn, .. } = cell.identity {
                topo.eutra_index
                    .entry((earfcn, pci))
                    .or_default()
                    .insert(cell.cell_uid.clone());
            }
            topo.cells.insert(cell.cell_uid.clone(), cell);
        }
        let mut dangling = Vec::new();
        let uids: Vec<String> = topo.cells.keys().cloned().collect();
        for uid in uids {
            let neighbors = topo.cells[&uid].ho_neighbors.clone();
            for neighbor in neighbors {
                if neighbor == uid {
                    continue;
                }
                if !topo.cells.contains_key(&neighbor) {
                    dangling.push(DanglingNeighbor {
                        from: uid.clone(),
                        to: neighbor,
                    });
                    continue;
                }
                topo.adjacency
                    .get_mut(&uid)
                    .unwrap()
                    .insert(neighbor.clone());
                topo.adjacency
                    .get_mut(&neighbor)
                    .unwrap()
                    .insert(uid.clone());
            }
        }
        Ok((topo, dangling))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, uid: &str) -> Option<&TopologyCell> {
        self.cells.get(uid)
    }

    pub fn cells(&self) -> impl Iterator<Item = &TopologyCell> {
        self.cells.values()
    }

    pub fn neighbors_of(&self, uid: &str) -> Option<&BTreeSet<String>> {
        self.adjacency.get(uid)
    }

    /// Iterate uids of E-UTRA cells operating (pci, earfcn).
    pub fn resolve_eutra(&self, pci: u16, earfcn: u32) -> impl Iterator<Item = &String> {
        self.eutra_index
            .get(&(earfcn, pci))
            .into_iter()
            .flat_map(|s| s.iter())
    }

    /// All RATs present anywhere in the topology.
    pub fn rats(&self) -> BTreeSet<RatType> {
        self.cells.values().map(|c| c.identity.rat()).collect()
    }

    /// All PLMNs present anywhere in the topology.
    pub fn plmns(&self) -> BTreeSet<Plmn> {
        self.cells.values().map(|c| c.plmn).collect()
    }

    /// Shortest-path hop count between two cells on the handover graph;
    /// `None` when they are disconnected.
    pub fn handover_distance(&self, a: &str, b: &str) -> Result<Option<u32>, TopologyError> {
        if !self.cells.contains_key(a) {
            return Err(TopologyError::UnknownCell(a.to_string()));
        }
        if !self.cells.contains_key(b) {
            return Err(TopologyError::UnknownCell(b.to_string()));
        }
        Ok(self.bfs_within(a, u32::MAX).get(b).copied())
    }

    /// BFS distances from `start`, cut off at `max_distance`.
    fn bfs_within(&self, start: &str, max_distance: u32) -> BTreeMap<String, u32> {
        let mut dist = BTreeMap::new();
        let mut queue = VecDeque::new();
        dist.insert(start.to_string(), 0u32);
        queue.push_back(start.to_string());
        while let Some(uid) = queue.pop_front() {
            let d = dist[&uid];
            if d == max_distance {
                continue;
            }
            if let Some(neighbors) = self.adjacency.get(&uid) {
                for next in neighbors {
                    if !dist.contains_key(next) {
                        dist.insert(next.clone(), d + 1);
                        queue.push_back(next.clone());
                    }
                }
            }
        }
        dist
    }
}

/// Which cells a UE near a given collector may legitimately observe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedView {
    pub collector_uid: String,
    pub hops: u32,
    /// earfcn -> allowed PCIs for E-UTRA observations.
    pub allowed_pcis: BTreeMap<u32, BTreeSet<u16>>,
    /// arfcn -> allowed (ncc, bcc) for GERAN observations.
    pub allowed_geran: BTreeMap<u16, BTreeSet<(u8, u8)>>,
    /// RATs operated anywhere in the topology.
    pub legitimate_rats: BTreeSet<RatType>,
    /// PLMNs operated anywhere in the topology.
    pub legitimate_plmns: BTreeSet<Plmn>,
}

/// Why an observation is not covered by the expected view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotAllowedReason {
    /// The observation's RAT is not operated anywhere in the topology.
    UnknownRat(RatType),
    /// The observation carries a CGI whose PLMN is not operated.
    UnknownPlmn(Plmn),
    /// The (RAT, frequency, identity) is not expected near the collector.
    PciNotExpected,
}

impl fmt::Display for NotAllowedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NotAllowedReason::UnknownRat(rat) => write!(f, "rat {rat} not operated"),
            NotAllowedReason::UnknownPlmn(plmn) => write!(f, "plmn {plmn} not operated"),
            NotAllowedReason::PciNotExpected => f.write_str("cell not expected near collector"),
        }
    }
}

/// Outcome of checking an observation against an expected view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllowanceCheck {
    Allowed,
    NotAllowed(NotAllowedReason),
}

impl AllowanceCheck {
    pub fn is_allowed(&self) -> bool {
        matches!(self, AllowanceCheck::Allowed)
    }
}

/// Build the expected view for a collector with an N-hop expansion.
///
/// The allowed sets contain exactly the cells at handover-graph distance
/// <= N+1 from the collector (collector included), keyed by the frequency
/// each cell actually operates on.
pub fn build_expected_view(
    topology: &CellTopology,
    collector_uid: &str,
    hops: u32,
) -> Result<ExpectedView, TopologyError> {
    if topology.cell(collector_uid).is_none() {
        return Err(TopologyError::UnknownCell(collector_uid.to_string()));
    }
    let reach = topology.bfs_within(collector_uid, hops.saturating_add(1));
    let mut view = ExpectedView {
        collector_uid: collector_uid.to_string(),
        hops,
        allowed_pcis: BTreeMap::new(),
        allowed_geran: BTreeMap::new(),
        legitimate_rats: topology.rats(),
        legitimate_plmns: topology.plmns(),
    };
    for uid in reach.keys() {
        match topology.cells[uid].identity {
            CellIdentity::Eutra { pci, earfcn, .. } => {
                view.allowed_pcis.entry(earfcn).or_default().insert(pci);
            }
            CellIdentity::Gera {
                arfcn, ncc, bcc, ..
            } => {
                view.allowed_geran
                    .entry(arfcn)
                    .or_default()
                    .insert((ncc, bcc));
            }
            CellIdentity::Utra | CellIdentity::Nr => {}
        }
    }
    Ok(view)
}

/// Check an observed identity against an expected view.
pub fn is_allowed(view: &ExpectedView, observed: &CellIdentity) -> AllowanceCheck {
    let rat = observed.rat();
    if !view.legitimate_rats.contains(&rat) {
        return AllowanceCheck::NotAllowed(NotAllowedReason::UnknownRat(rat));
    }
    if let Some(cgi) = observed.cgi() {
        if !view.legitimate_plmns.contains(&cgi.plmn) {
            return AllowanceCheck::NotAllowed(NotAllowedReason::UnknownPlmn(cgi.plmn));
        }
    }
    let expected = match observed {
        CellIdentity::Eutra { pci, earfcn, .. } => view
            .allowed_pcis
            .get(earfcn)
            .is_some_and(|pcis| pcis.contains(pci)),
        CellIdentity::Gera {
            arfcn, ncc, bcc, ..
        } => view
            .allowed_geran
            .get(arfcn)
            .is_some_and(|codes| codes.contains(&(*ncc, *bcc))),
        CellIdentity::Utra | CellIdentity::Nr => false,
    };
    if expected {
        AllowanceCheck::Allowed
    } else {
        AllowanceCheck::NotAllowed(NotAllowedReason::PciNotExpected)
    }
}

/// Result of [`load_topology`]: the topology plus non-fatal warnings.
#[derive(Debug)]
pub struct TopologyLoad {
    pub topology: CellTopology,
    pub dangling: Vec<DanglingNeighbor>,
}

/// Load a topology CSV (schema in [`TOPOLOGY_CSV_HEADER`]).
pub fn load_topology(text: &str) -> Result<TopologyLoad, TopologyError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());

    let found = reader
        .headers()
        .map_err(|e| TopologyError::RowParse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != TOPOLOGY_CSV_HEADER {
        return Err(TopologyError::HeaderMismatch { found });
    }

    let mut cells = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| TopologyError::RowParse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        cells.push(parse_topology_row(&record, line)?);
    }
    let (topology, dangling) = CellTopology::from_cells(cells)?;
    Ok(TopologyLoad { topology, dangling })
}

fn parse_topology_row(
    record: &csv::StringRecord,
    line: u64,
) -> Result<TopologyCell, TopologyError> {
    let fail = |message: String| TopologyError::RowParse { line, message };
    let cell = |idx: usize| record.get(idx).unwrap_or("").trim();

    let cell_uid = cell(0).to_string();
    if cell_uid.is_empty() {
        return Err(fail("cell_uid is empty".into()));
    }
    let rat: RatType = cell(1).parse().map_err(|e| fail(format!("rat: {e}")))?;
    let plmn = Plmn::parse(cell(2), cell(3)).map_err(&fail)?;
    let tac_or_lac: u16 = cell(10)
        .parse()
        .map_err(|e| fail(format!("tac_lac: {e}")))?;
    let cell_identity: Option<u32> = match cell(11) {
        "" => None,
        text => Some(
            text.parse()
                .map_err(|e| fail(format!("cell_identity: {e}")))?,
        ),
    };

    let identity = match rat {
        RatType::Eutra => {
            let pci: u16 = cell(4).parse().map_err(|e| fail(format!("pci: {e}")))?;
            let earfcn: u32 = cell(5).parse().map_err(|e| fail(format!("earfcn: {e}")))?;
            if pci > PCI_MAX {
                return Err(fail(format!("pci {pci} out of range 0..=503")));
            }
            if earfcn > EARFCN_MAX {
                return Err(fail(format!("earfcn {earfcn} out of range")));
            }
            if let Some(ci) = cell_identity {
                if ci >= 1 << 28 {
                    return Err(fail(format!("cell_identity {ci} exceeds 28 bits")));
                }
            }
            CellIdentity::Eutra {
                pci,
                earfcn,
                cgi: cell_identity.map(|ci| Cgi::new(plmn, tac_or_lac, ci)),
            }
        }
        RatType::Gera => {
            let arfcn: u16 = cell(6).parse().map_err(|e| fail(format!("arfcn: {e}")))?;
            let band: BandIndicator = cell(7).parse().map_err(|e| fail(format!("band: {e}")))?;
            let ncc: u8 = cell(8).parse().map_err(|e| fail(format!("ncc: {e}")))?;
            let bcc: u8 = cell(9).parse().map_err(|e| fail(format!("bcc: {e}")))?;
            if arfcn > ARFCN_MAX {
                return Err(fail(format!("arfcn {arfcn} out of range 0..=1023")));
            }
            if ncc > 7 || bcc > 7 {
                return Err(fail(format!("bsic {ncc}-{bcc} out of range")));
            }
            if let Some(ci) = cell_identity {
                if ci > u32::from(u16::MAX) {
                    return Err(fail(format!("cell_identity {ci} exceeds 16 bits")));
                }
            }
            CellIdentity::Gera {
                arfcn,
                band,
                ncc,
                bcc,
                cgi: cell_identity.map(|ci| Cgi::new(plmn, tac_or_lac, ci)),
            }
        }
        other => return Err(fail(format!("{other} cells are not supported"))),
    };

    let location = match (cell(12), cell(13)) {
        ("", "") => None,
        (lat, lon) => {
            let lat: f64 = lat.parse().map_err(|e| fail(format!("lat: {e}")))?;
            let lon: f64 = lon.parse().map_err(|e| fail(format!("lon: {e}")))?;
            Some((lat, lon))
        }
    };
    let ho_neighbors = cell(14)
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();

    Ok(TopologyCell {
        cell_uid,
        identity,
        plmn,
        tac_or_lac,
        location,
        ho_neighbors,
    })
}

/// Render cells back to the topology CSV schema. The loader accepts the
/// output; used by the simulator to emit the legitimate-cell topology.
pub fn render_topology_csv<'a>(cells: impl Iterator<Item = &'a TopologyCell>) -> String {
    let mut out = String::from(TOPOLOGY_CSV_HEADER);
    out.push('\n');
    for cell in cells {
        let (pci, earfcn, arfcn, band, ncc, bcc, ci) = match cell.identity {
            CellIdentity::Eutra { pci, earfcn, cgi } => (
                pci.to_string(),
                earfcn.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                cgi.map_or(String::new(), |c| c.cell_identity.to_string()),
            ),
            CellIdentity::Gera {
                arfcn,
                band,
                ncc,
                bcc,
                cgi,
            } => (
                String::new(),
                String::new(),
                arfcn.to_string(),
                band.to_string(),
                ncc.to_string(),
                bcc.to_string(),
                cgi.map_or(String::new(), |c| c.cell_identity.to_string()),
            ),
            CellIdentity::Utra | CellIdentity::Nr => continue,
        };
        let (lat, lon) = cell
            .location
            .map_or((String::new(), String::new()), |(lat, lon)| {
                (lat.to_string(), lon.to_string())
            });
        let mnc = if cell.plmn.mnc_is_3digit {
            format!("{:03}", cell.plmn.mnc)
        } else {
            format!("{:02}", cell.plmn.mnc)
        };
        out.push_str(&format!(
            "{},{},{:03},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            cell.cell_uid,
            cell.identity.rat(),
            cell.plmn.mcc,
            mnc,
            pci,
            earfcn,
            arfcn,
            band,
            ncc,
            bcc,
            cell.tac_or_lac,
            ci,
            lat,
            lon,
            cell.ho_neighbors.join(";"),
        ));
    }
    out
}
