use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use lexsimp::error::Error;
use lexsimp::io::read_dataset;
use lexsimp::pipeline::{simplify_dataset, ProviderKind, ProviderSettings};
use lexsimp::providers::remote::{serve_tcp, Endpoint, RemoteClient};
use lexsimp::providers::stub::StubNli;
use lexsimp::providers::{LexiconKind, Nli, Providers};
use lexsimp::{Instance, RunConfig, RunId};

fn spawn_server(providers: Providers) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || serve_tcp(listener, providers));
    format!("tcp://{addr}")
}

fn instances() -> Vec<Instance> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/simplify_10.tsv");
    read_dataset(path, false)
        .unwrap()
        .instances()
        .cloned()
        .collect()
}

fn remote_with_stub_lexicons(endpoint: &str) -> Providers {
    let client = Arc::new(RemoteClient::connect(&Endpoint::parse(endpoint).unwrap()).unwrap());
    let local = Providers::stub();
    Providers {
        lm: client.clone(),
        nli: client.clone(),
        embedder: client,
        ..local
    }
}

#[test]
fn remote_stub_matches_local_stub_for_every_run() {
    let endpoint = spawn_server(Providers::stub());
    let remote = remote_with_stub_lexicons(&endpoint);
    assert!(!remote.concurrent());
    let data = instances();
    for run in [
        RunId::Lsbert,
        RunId::Mantis1,
        RunId::Mantis2,
        RunId::Mantis3,
    ] {
        let cfg = RunConfig::preset(run);
        let local = simplify_dataset(&data, &Providers::stub(), &cfg, 1).unwrap();
        let over_wire = simplify_dataset(&data, &remote, &cfg, 4).unwrap();
        assert_eq!(local, over_wire, "{run}");
    }
}

#[test]
fn remote_settings_leave_lexicons_absent() {
    let endpoint = spawn_server(Providers::stub());
    let settings = ProviderSettings {
        kind: Some(ProviderKind::Remote),
        endpoint: Some(endpoint),
        ..Default::default()
    };
    let providers = settings.build().unwrap();
    assert!(providers.lexicon(LexiconKind::Freq).is_none());
    let err = simplify_dataset(
        &instances(),
        &providers,
        &RunConfig::preset(RunId::Mantis1),
        1,
    )
    .unwrap_err();
    assert!(
        matches!(err, Error::MissingFeature(ref f) if f == "freq"),
        "{err}"
    );
}

/// Entailment model that fails after a fixed number of calls.
struct FlakyNli {
    left: AtomicUsize,
}

impl Nli for FlakyNli {
    fn name(&self) -> &str {
        "flaky"
    }

    fn entail_prob(&self, premise: &str, hypothesis: &str) -> lexsimp::Result<f64> {
        if self.left.fetch_sub(1, Ordering::SeqCst) == 0 {
            return Err(Error::ProviderFailure("out of memory".into()));
        }
        StubNli::default().entail_prob(premise, hypothesis)
    }
}

#[test]
fn backend_errors_surface_as_provider_failures() {
    let mut server = Providers::stub();
    server.nli = Arc::new(FlakyNli {
        left: AtomicUsize::new(25),
    });
    let endpoint = spawn_server(server);
    let remote = remote_with_stub_lexicons(&endpoint);
    let err =
        simplify_dataset(&instances(), &remote, &RunConfig::preset(RunId::Mantis2), 1).unwrap_err();
    match err {
        Error::ProviderFailure(msg) => assert!(msg.contains("out of memory"), "{msg}"),
        e => panic!("{e}"),
    }
}
