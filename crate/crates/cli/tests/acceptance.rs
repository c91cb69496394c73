//! Acceptance checks. Runs as a plain binary (no libtest harness) and prints
//! one PASS/FAIL line per criterion, then exits non-zero if any failed.

use std::fs;
use std::net::{SocketAddr, TcpListener};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, Command as Process, ExitCode, Stdio};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use essencery_core::graph::{
    Command, EditSession, ElementId, GraphDocument, HistoryStep, NodeKind, Point,
};
use essencery_core::kernel::{KernelCategory, KernelPath};
use essencery_core::lint::{lint, lint_document, Code};
use essencery_core::render::RenderTheme;
use essencery_core::{
    load_standard_kernel, parse, print, render_graph_svg, structural_equal, Graph,
};
use essencery_server::Store;
use essencery_testkit::http::{request, Reply};
use essencery_testkit::{
    dangling_references, one_week_fixture, random_graph, random_run, replay, rng, GraphLimits,
};

const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(5);
const UNDO_REDO_BUDGET: Duration = Duration::from_secs(10);
const SERVICE_BUDGET: Duration = Duration::from_secs(5);

const ROUND_TRIP_GRAPHS: u64 = 100;
const COMMAND_SEQUENCES: u64 = 200;
const KILL_ROUNDS: u64 = 8;
const SEED: u64 = 0x5eed_e55e;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn core_fixture(rel: &str) -> PathBuf {
    repo_path("../core/tests/fixtures").join(rel)
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

// 1 ---------------------------------------------------------------------

fn round_trip() -> Outcome {
    let limits = GraphLimits::default();
    let mut non_ascii = 0;
    for i in 0..ROUND_TRIP_GRAPHS {
        let g = random_graph(&mut rng(SEED ^ i), limits);
        ensure!(
            g.nodes().len() <= 50 && g.relations().len() <= 100 && g.cards().len() <= 20,
            "graph {i} exceeds size limits"
        );
        if g.nodes().any(|n| !n.name.is_ascii()) {
            non_ascii += 1;
        }
        let text = print(&g);
        let back = parse(&text).map_err(|e| format!("graph {i}: {e}"))?;
        ensure!(
            structural_equal(&back, &g),
            "graph {i} changed through print/parse"
        );
    }
    ensure!(non_ascii > 0, "no graph had non-ASCII names");

    let dir = core_fixture("corpus");
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "ess"))
        .collect();
    files.sort();
    ensure!(files.len() == 20, "corpus has {} files", files.len());
    for path in &files {
        let g = parse(&read(path)?).map_err(|e| format!("{}:{e}", path.display()))?;
        let once = print(&g);
        let twice = print(&parse(&once).map_err(|e| e.to_string())?);
        ensure!(once == twice, "{} is not a fixpoint", path.display());
    }
    Ok(format!(
        "{ROUND_TRIP_GRAPHS} random graphs ({non_ascii} with non-ASCII names), {} corpus files",
        files.len()
    ))
}

// 2 ---------------------------------------------------------------------

fn undo_redo() -> Outcome {
    let mut commands = 0;
    for i in 0..COMMAND_SEQUENCES {
        let len = 1 + (i as usize * 7) % 60;
        let mut run = random_run(&mut rng(SEED.wrapping_add(i)), len, 30);
        let final_graph = run.session.graph().clone();
        ensure!(
            final_graph == replay(&run.initial, &run.accepted),
            "sequence {i}: session differs from replay"
        );
        commands += run.accepted.len();
        while run.session.undo() == HistoryStep::Stepped {}
        ensure!(
            run.session.graph() == &run.initial,
            "sequence {i}: undo-all missed the initial graph"
        );
        while run.session.redo() == HistoryStep::Stepped {}
        ensure!(
            run.session.graph() == &final_graph,
            "sequence {i}: redo-all missed the final graph"
        );
    }
    Ok(format!(
        "{COMMAND_SEQUENCES} sequences, {commands} accepted commands"
    ))
}

// 3 ---------------------------------------------------------------------

fn cascade_integrity() -> Outcome {
    let kernel = load_standard_kernel().map_err(|e| e.to_string())?;
    let mut states = 0;
    let check = |s: &EditSession, i: u64| -> Result<(), String> {
        let dangling = dangling_references(s.graph());
        ensure!(dangling.is_empty(), "sequence {i}: {dangling:?}");
        let structural: Vec<String> = lint(s.graph(), &kernel)
            .iter()
            .filter(|d| matches!(d.code, Code::E001 | Code::E002))
            .map(|d| d.to_string())
            .collect();
        ensure!(structural.is_empty(), "sequence {i}: {structural:?}");
        Ok(())
    };
    for i in 0..COMMAND_SEQUENCES {
        let mut run = random_run(&mut rng(!SEED ^ i), 40, 30);
        check(&run.session, i)?;
        states += 1;
        while run.session.undo() == HistoryStep::Stepped {
            check(&run.session, i)?;
            states += 1;
        }
        while run.session.redo() == HistoryStep::Stepped {
            check(&run.session, i)?;
            states += 1;
        }
    }
    Ok(format!("{states} engine states scanned"))
}

// 4 ---------------------------------------------------------------------

fn kernel_seed() -> Outcome {
    let k = load_standard_kernel().map_err(|e| e.to_string())?;
    ensure!(k.areas().len() == 3, "{} areas", k.areas().len());
    ensure!(k.alphas().len() == 7, "{} alphas", k.alphas().len());
    for a in k.alphas() {
        ensure!(
            a.states.len() >= 5,
            "alpha {} has {} states",
            a.name,
            a.states.len()
        );
    }
    let mut elements = 0;
    for el in k.elements() {
        let text = el.path().to_string();
        let path: KernelPath = text.parse().map_err(|e| format!("{text}: {e}"))?;
        let back = k.resolve(&path).map_err(|e| format!("{text}: {e}"))?;
        ensure!(
            back.name() == el.name() && back.category() == el.category(),
            "{text} resolved to {}",
            back.name()
        );
        elements += 1;
    }
    Ok(format!("3 areas, 7 alphas, {elements} elements resolve"))
}

// 5 ---------------------------------------------------------------------

/// Binding compatibility written out independently of the engine.
fn compatible(kind: NodeKind, category: KernelCategory) -> bool {
    matches!(
        (kind, category),
        (NodeKind::Alpha, KernelCategory::Alpha)
            | (NodeKind::ActivitySpace, KernelCategory::Space)
            | (NodeKind::Competency, KernelCategory::Competency)
    )
}

fn lint_table() -> Outcome {
    let kernel = load_standard_kernel().map_err(|e| e.to_string())?;
    let table = [
        ("e001.json", "E001"),
        ("e002.json", "E002"),
        ("e003.ess", "E003"),
        ("e004.ess", "E004"),
        ("w001.ess", "W001"),
        ("w002.ess", "W002"),
        ("w003.ess", "W003"),
        ("w004.ess", "W004"),
        ("w005.ess", "W005"),
    ];
    for (file, code) in table {
        let text = read(&core_fixture("lint").join(file))?;
        let diags = if file.ends_with(".json") {
            let doc: GraphDocument =
                serde_json::from_str(&text).map_err(|e| format!("{file}: {e}"))?;
            lint_document(&doc, &kernel)
        } else {
            lint(&parse(&text).map_err(|e| format!("{file}:{e}"))?, &kernel)
        };
        let codes: Vec<String> = diags.iter().map(|d| d.code.to_string()).collect();
        ensure!(codes == [code], "{file} gave {codes:?}, expected [{code}]");
    }

    let mut pairs = 0;
    for kind in NodeKind::ALL {
        for category in KernelCategory::ALL {
            let element = kernel
                .elements()
                .find(|e| e.category() == category)
                .ok_or_else(|| format!("no {category} in kernel"))?;
            let mut s = EditSession::from_graph(Graph::new("matrix", "Matrix"));
            let id = ElementId::new("n1").map_err(|e| e.to_string())?;
            s.apply(Command::AddNode {
                id: id.clone(),
                kind,
                name: "X".into(),
                position: Point::new(0, 0),
                area: None,
            })
            .map_err(|e| e.to_string())?;
            s.apply(Command::SetBinding {
                owner: id,
                target: element.path(),
            })
            .map_err(|e| e.to_string())?;
            let fired = lint(s.graph(), &kernel)
                .iter()
                .any(|d| d.code == Code::E004);
            ensure!(
                fired != compatible(kind, category),
                "E004 wrong for {kind} -> {category}"
            );
            pairs += 1;
        }
    }
    Ok(format!(
        "{} fixtures, {pairs} kind x category pairs",
        table.len()
    ))
}

// 6 ---------------------------------------------------------------------

fn renderer_determinism() -> Outcome {
    let g = one_week_fixture();
    ensure!(
        g.nodes().len() == 12 && g.relations().len() == 14,
        "fixture has {} nodes, {} relations",
        g.nodes().len(),
        g.relations().len()
    );
    let theme = RenderTheme::from_kernel(&load_standard_kernel().map_err(|e| e.to_string())?);
    let first = render_graph_svg(&g, &theme);
    let second = render_graph_svg(&g, &theme);
    ensure!(first == second, "two renders differ");
    let golden = read(&core_fixture("one_week.svg"))?;
    ensure!(first == golden, "render differs from the golden file");
    let groups =
        first.matches("<g class=\"node ").count() + first.matches("<g class=\"note\"").count();
    let expected = g.nodes().len() + g.notes().len();
    ensure!(
        groups == expected,
        "{groups} node groups, expected {expected}"
    );
    Ok(format!("{} bytes, {groups} node groups", first.len()))
}

// 7 ---------------------------------------------------------------------

struct Served {
    child: Child,
    addr: SocketAddr,
}

impl Served {
    fn start(data_dir: &Path) -> Result<Served, String> {
        let port = TcpListener::bind("127.0.0.1:0")
            .and_then(|l| l.local_addr())
            .map_err(|e| e.to_string())?
            .port();
        let child = Process::new(env!("CARGO_BIN_EXE_essencery"))
            .args(["serve", "--port", &port.to_string(), "--data-dir"])
            .arg(data_dir)
            .env_remove("ESSENCERY_KERNEL")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?;
        let served = Served {
            child,
            addr: SocketAddr::from(([127, 0, 0, 1], port)),
        };
        let deadline = Instant::now() + Duration::from_secs(3);
        while Instant::now() < deadline {
            if request(served.addr, "GET", "/api/graphs", &[], b"").is_ok() {
                return Ok(served);
            }
            thread::sleep(Duration::from_millis(10));
        }
        Err("server did not come up".into())
    }

    fn call(
        &self,
        method: &str,
        path: &str,
        headers: &[(&str, &str)],
        body: &[u8],
    ) -> Result<Reply, String> {
        request(self.addr, method, path, headers, body).map_err(|e| format!("{method} {path}: {e}"))
    }

    /// SIGKILL on unix: no chance to clean up.
    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn json_field(reply: &Reply, field: &str) -> Result<serde_json::Value, String> {
    let v: serde_json::Value =
        serde_json::from_slice(&reply.body).map_err(|e| format!("{e}: {}", reply.text()))?;
    Ok(v[field].clone())
}

fn retitled(base: &Graph, title: &str) -> Graph {
    let mut g = base.clone();
    g.title = title.to_owned();
    g
}

fn document_for(id: &str, base: &Graph, title: &str) -> Vec<u8> {
    let mut doc = retitled(base, title).to_document();
    doc.id = id.to_owned();
    serde_json::to_vec(&doc).expect("documents serialize")
}

fn lifecycle(server: &Served) -> Result<(), String> {
    let created = server.call("POST", "/api/graphs", &[], br#"{"title":"One week"}"#)?;
    ensure!(created.status == 201, "POST gave {}", created.status);
    let id = json_field(&created, "id")?
        .as_str()
        .unwrap_or_default()
        .to_owned();
    ensure!(
        json_field(&created, "revision")? == 0,
        "new graph not at revision 0"
    );
    let path = format!("/api/graphs/{id}");
    let expected = retitled(&one_week_fixture(), "One week");
    let body = document_for(&id, &expected, "One week");

    let put = server.call("PUT", &path, &[("If-Match", "0")], &body)?;
    ensure!(put.status == 200, "PUT gave {}: {}", put.status, put.text());
    ensure!(
        json_field(&put, "revision")? == 1,
        "PUT did not move 0 -> 1"
    );

    let stale = server.call("PUT", &path, &[("If-Match", "0")], &body)?;
    ensure!(stale.status == 409, "stale PUT gave {}", stale.status);

    let text = server.call("GET", &format!("{path}.ess"), &[], b"")?;
    ensure!(text.status == 200, "GET .ess gave {}", text.status);
    let stored = parse(&text.text()).map_err(|e| format!("stored text: {e}"))?;
    ensure!(stored.revision == 1, "stored revision {}", stored.revision);
    ensure!(structural_equal(&stored, &expected), "stored graph differs");

    let deleted = server.call("DELETE", &path, &[], b"")?;
    ensure!(deleted.status == 204, "DELETE gave {}", deleted.status);
    let gone = server.call("GET", &path, &[], b"")?;
    ensure!(gone.status == 404, "GET after DELETE gave {}", gone.status);
    Ok(())
}

/// Saves in a tight loop and kills the server at `delay`. The file left
/// behind must be a complete save: the last acknowledged one or the one in
/// flight.
fn kill_during_saves(data_dir: &Path, delay: Duration) -> Result<u64, String> {
    let server = Served::start(data_dir)?;
    let created = server.call("POST", "/api/graphs", &[], br#"{"title":"rev 0"}"#)?;
    let id = json_field(&created, "id")?
        .as_str()
        .unwrap_or_default()
        .to_owned();
    let big = random_graph(&mut rng(SEED), GraphLimits::default());
    let small = one_week_fixture();

    let acked = Arc::new(AtomicU64::new(0));
    let stop = Arc::new(AtomicBool::new(false));
    let writer = {
        let (acked, stop, id, addr) = (acked.clone(), stop.clone(), id.clone(), server.addr);
        let (big, small) = (big.clone(), small.clone());
        thread::spawn(move || {
            let path = format!("/api/graphs/{id}");
            while !stop.load(Ordering::SeqCst) {
                let rev = acked.load(Ordering::SeqCst);
                let base = if (rev + 1) % 2 == 0 { &small } else { &big };
                let body = document_for(&id, base, &format!("rev {}", rev + 1));
                let etag = rev.to_string();
                match request(addr, "PUT", &path, &[("If-Match", &etag)], &body) {
                    Ok(r) if r.status == 200 => acked.store(rev + 1, Ordering::SeqCst),
                    _ => break,
                }
            }
        })
    };
    thread::sleep(delay);
    server.kill();
    stop.store(true, Ordering::SeqCst);
    let _ = writer.join();

    let last = acked.load(Ordering::SeqCst);
    let text = read(&data_dir.join(format!("{id}.ess")))?;
    let g = parse(&text).map_err(|e| format!("file left after kill does not parse: {e}"))?;
    ensure!(
        g.revision == last || g.revision == last + 1,
        "file at revision {}, last acknowledged {last}",
        g.revision
    );
    ensure!(
        g.title == format!("rev {}", g.revision),
        "title {:?} at revision {}",
        g.title,
        g.revision
    );
    let base = if g.revision % 2 == 0 { &small } else { &big };
    ensure!(
        g.revision == 0 || structural_equal(&g, &retitled(base, &g.title)),
        "revision {} has the wrong content",
        g.revision
    );

    // A restart cleans up and serves the surviving revision.
    let again = Served::start(data_dir)?;
    let r = again.call("GET", &format!("/api/graphs/{id}"), &[], b"")?;
    ensure!(r.status == 200, "GET after restart gave {}", r.status);
    ensure!(
        json_field(&r, "revision")? == g.revision,
        "restart served another revision"
    );
    let leftovers = fs::read_dir(data_dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .count();
    ensure!(leftovers == 0, "{leftovers} temp files survived a restart");
    Ok(last)
}

fn abandoned_stage_keeps_old_file(dir: &Path) -> Result<(), String> {
    let store = Store::open(dir).map_err(|e| e.to_string())?;
    let g = store.create("before").map_err(|e| e.to_string())?;
    let before = fs::read(store.path_of(&g.id)).map_err(|e| e.to_string())?;
    let mut changed = one_week_fixture();
    changed.id = g.id.clone();
    let temp = store
        .stage(&changed)
        .and_then(|s| s.abandon().map_err(Into::into))
        .map_err(|e| e.to_string())?;
    ensure!(temp.exists(), "staged temp file missing");
    let after = fs::read(store.path_of(&g.id)).map_err(|e| e.to_string())?;
    ensure!(after == before, "target changed before commit");
    Ok(())
}

fn service_lifecycle() -> Outcome {
    let data = tempfile::tempdir().map_err(|e| e.to_string())?;
    {
        let server = Served::start(data.path())?;
        lifecycle(&server)?;
    }
    abandoned_stage_keeps_old_file(data.path())?;
    let mut saves = Vec::new();
    for round in 0..KILL_ROUNDS {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let delay = Duration::from_millis(40 + 37 * round);
        saves.push(kill_during_saves(dir.path(), delay)?);
    }
    Ok(format!(
        "lifecycle ok, {KILL_ROUNDS} kills after {saves:?} acknowledged saves"
    ))
}

// 8 ---------------------------------------------------------------------

fn cli_exit_codes() -> Outcome {
    let fixtures = repo_path("tests/fixtures");
    let run = |args: &[&std::ffi::OsStr]| {
        Process::new(env!("CARGO_BIN_EXE_essencery"))
            .args(args)
            .env_remove("ESSENCERY_KERNEL")
            .output()
            .map_err(|e| e.to_string())
    };

    let empty = fixtures.join("empty.ess");
    let out = run(&["lint".as_ref(), empty.as_os_str()])?;
    ensure!(
        out.status.code() == Some(0),
        "empty.ess exited {:?}",
        out.status.code()
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    ensure!(
        stdout.lines().any(|l| l.starts_with("W004 ")),
        "no W004 line in {stdout:?}"
    );

    let broken = fixtures.join("broken.ess");
    let out = run(&["lint".as_ref(), broken.as_os_str()])?;
    ensure!(
        out.status.code() == Some(1),
        "broken.ess exited {:?}",
        out.status.code()
    );
    ensure!(
        String::from_utf8_lossy(&out.stdout).contains("E003"),
        "broken.ess did not report E003"
    );

    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let canonical = scratch.path().join("canonical.ess");
    fs::copy(fixtures.join("canonical.ess"), &canonical).map_err(|e| e.to_string())?;
    let before = fs::read(&canonical).map_err(|e| e.to_string())?;
    let out = run(&["fmt".as_ref(), canonical.as_os_str(), "--write".as_ref()])?;
    ensure!(
        out.status.code() == Some(0),
        "fmt --write exited {:?}",
        out.status.code()
    );
    ensure!(
        fs::read(&canonical).map_err(|e| e.to_string())? == before,
        "fmt --write changed canonical bytes"
    );
    Ok("lint 0/1, fmt --write 0 with bytes unchanged".into())
}

// -----------------------------------------------------------------------

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        name: "round trip",
        budget: Some(ROUND_TRIP_BUDGET),
        check: round_trip,
    },
    Criterion {
        name: "undo/redo",
        budget: Some(UNDO_REDO_BUDGET),
        check: undo_redo,
    },
    Criterion {
        name: "cascade integrity",
        budget: None,
        check: cascade_integrity,
    },
    Criterion {
        name: "kernel seed",
        budget: None,
        check: kernel_seed,
    },
    Criterion {
        name: "lint table",
        budget: None,
        check: lint_table,
    },
    Criterion {
        name: "renderer determinism",
        budget: None,
        check: renderer_determinism,
    },
    Criterion {
        name: "service lifecycle",
        budget: Some(SERVICE_BUDGET),
        check: service_lifecycle,
    },
    Criterion {
        name: "cli exit codes",
        budget: None,
        check: cli_exit_codes,
    },
];

fn main() -> ExitCode {
    let mut failed = 0;
    for (i, c) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            })
            .and_then(|detail| match c.budget {
                Some(b) if start.elapsed() > b => {
                    Err(format!("took {:.2?}, budget {b:?}", start.elapsed()))
                }
                _ => Ok(detail),
            });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {}. {} ({elapsed:.2?}): {detail}", i + 1, c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {} ({elapsed:.2?}): {why}", i + 1, c.name);
            }
        }
    }
    println!("{} passed, {failed} failed", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
