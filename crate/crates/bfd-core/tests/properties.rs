//! Property tests over the core invariants: archive roundtrips, dependency
//! ordering, tag arithmetic, the sim compiler and the test pipeline.

use std::collections::BTreeMap;

use proptest::prelude::*;

use bfd_core::archive::{parse_tag_name, ArchiveStore, RevRef, Tag};
use bfd_core::build::sim_compile;
use bfd_core::error::BfdError;
use bfd_core::manifest::{resolve_build_order, ProjectManifest};
use bfd_core::testreport::{evaluate_line, render_xml, TestOutcome};
use bfd_core::workspace::{next_tag, Bump};

fn file_map() -> impl Strategy<Value = BTreeMap<String, Vec<u8>>> {
    proptest::collection::btree_map(
        "[a-z]{1,6}(/[a-z]{1,6}){0,2}",
        proptest::collection::vec(any::<u8>(), 0..64),
        0..8,
    )
}

proptest! {
    #[test]
    fn commit_checkout_roundtrip(files in file_map()) {
        let dir = tempfile::tempdir().unwrap();
        let store = ArchiveStore::open(dir.path().join("store")).unwrap();
        let rev = store.commit("p", &files, "m").unwrap();
        let out = store.checkout("p", &RevRef::Seq(rev.seq)).unwrap();
        prop_assert_eq!(out, files);
    }

    #[test]
    fn history_length_equals_commit_count(commits in proptest::collection::vec(file_map(), 1..6)) {
        let dir = tempfile::tempdir().unwrap();
        let store = ArchiveStore::open(dir.path().join("store")).unwrap();
        for (i, files) in commits.iter().enumerate() {
            let rev = store.commit("p", files, "m").unwrap();
            prop_assert_eq!(rev.seq, i as u64 + 1);
        }
        let history = store.history("p").unwrap();
        prop_assert_eq!(history.len(), commits.len());
        let seqs: Vec<u64> = history.iter().map(|r| r.seq).collect();
        prop_assert_eq!(seqs, (1..=commits.len() as u64).collect::<Vec<_>>());
    }

    #[test]
    fn tag_resolution_matches_seq(count in 1u64..5, tag_seq in 1u64..5) {
        prop_assume!(tag_seq <= count);
        let dir = tempfile::tempdir().unwrap();
        let store = ArchiveStore::open(dir.path().join("store")).unwrap();
        for i in 1..=count {
            let files: BTreeMap<String, Vec<u8>> =
                [("a".to_string(), i.to_le_bytes().to_vec())].into();
            store.commit("p", &files, "m").unwrap();
        }
        store.tag("p", tag_seq, "V01-00-00").unwrap();
        let by_tag = store.checkout("p", &RevRef::Tag("V01-00-00".into())).unwrap();
        let by_seq = store.checkout("p", &RevRef::Seq(tag_seq)).unwrap();
        prop_assert_eq!(by_tag, by_seq);
    }

    #[test]
    fn manifest_render_reparses_equal(
        name in "[a-z][a-z0-9-]{0,8}",
        package in "[a-z][a-z0-9]{0,4}(\\.[a-z][a-z0-9]{0,4}){0,3}",
        deps in proptest::collection::btree_set("[a-z][a-z0-9-]{0,8}", 0..4),
    ) {
        let mut m = ProjectManifest::new(&name, &package).unwrap();
        m.dependencies = deps.into_iter().filter(|d| *d != name).collect();
        let reparsed = ProjectManifest::parse(&m.render(), "t").unwrap();
        prop_assert_eq!(reparsed, m);
    }

    #[test]
    fn topological_order_respects_every_edge(adj in dag_strategy(6)) {
        let manifests = manifests_from(&adj);
        let order = resolve_build_order(&manifests, true).unwrap();
        let pos = |n: &str| order.iter().position(|x| x == n).unwrap();
        for m in &manifests {
            for dep in &m.dependencies {
                prop_assert!(pos(dep) < pos(&m.name));
            }
        }
        // determinism
        let mut shuffled = manifests.clone();
        shuffled.reverse();
        prop_assert_eq!(resolve_build_order(&shuffled, true).unwrap(), order);
    }

    #[test]
    fn cyclic_graphs_report_a_genuine_cycle(adj in cyclic_strategy(5)) {
        let manifests = manifests_from(&adj);
        match resolve_build_order(&manifests, true) {
            Err(BfdError::CycleDetected(path)) => {
                prop_assert!(path.len() >= 2);
                prop_assert_eq!(path.first(), path.last());
                for pair in path.windows(2) {
                    let m = manifests.iter().find(|m| m.name == pair[0]).unwrap();
                    prop_assert!(m.dependencies.contains(&pair[1]),
                        "{} does not depend on {}", pair[0], pair[1]);
                }
            }
            other => prop_assert!(false, "expected CycleDetected, got {other:?}"),
        }
    }

    #[test]
    fn next_tag_exceeds_all_existing(tags in proptest::collection::btree_set((0u8..20, 0u8..20, 0u8..20), 1..6), bump_idx in 0usize..3) {
        let bump = [Bump::Major, Bump::Minor, Bump::Patch][bump_idx];
        let existing: Vec<Tag> = tags
            .iter()
            .map(|(a, b, c)| Tag {
                name: format!("V{a:02}-{b:02}-{c:02}"),
                project: "p".into(),
                seq: 1,
            })
            .collect();
        let next = next_tag(&existing, bump).unwrap();
        let next_version = parse_tag_name(&next).unwrap();
        let max = *tags.iter().max().unwrap();
        prop_assert!(next_version > max, "{next_version:?} vs {max:?}");
    }

    #[test]
    fn generated_balanced_sources_always_compile(source in balanced_source()) {
        prop_assert!(sim_compile(&source).is_empty(), "{source:?}");
    }

    #[test]
    fn assert_outcomes_agree_with_direct_comparison(a in -1000i64..1000, b in -1000i64..1000, op_idx in 0usize..6) {
        let ops = ["==", "!=", "<", "<=", ">", ">="];
        let op = ops[op_idx];
        let expected = match op {
            "==" => a == b,
            "!=" => a != b,
            "<" => a < b,
            "<=" => a <= b,
            ">" => a > b,
            _ => a >= b,
        };
        let outcome = evaluate_line(&format!("assert {a} {op} {b}")).unwrap();
        match outcome {
            TestOutcome::Pass => prop_assert!(expected),
            TestOutcome::Fail { .. } => prop_assert!(!expected),
            TestOutcome::Error { .. } => prop_assert!(false, "unexpected error case"),
        }
    }

    #[test]
    fn report_counts_conserved_through_xml(outcomes in proptest::collection::vec(0usize..3, 0..50)) {
        let report = bfd_core::testreport::TestSuiteReport {
            project: "p".into(),
            cases: outcomes
                .iter()
                .enumerate()
                .map(|(i, kind)| bfd_core::testreport::TestCaseResult {
                    suite: "s".into(),
                    test: format!("line-{i}"),
                    outcome: match kind {
                        0 => TestOutcome::Pass,
                        1 => TestOutcome::Fail {
                            message: "assertion failed: 1 == 2".into(),
                            location: format!("s:{i}"),
                        },
                        _ => TestOutcome::Error { message: "malformed".into() },
                    },
                    duration: 0.0,
                })
                .collect(),
            duration: 0.5,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = bfd_core::testreport::write_xml_report(&report, dir.path()).unwrap();
        let parsed = bfd_core::testreport::parse_xml_report(&path).unwrap();
        prop_assert_eq!(parsed.totals(), report.totals());
        let text = render_xml(&report);
        let t = report.totals();
        let attrs = format!("tests=\"{}\" failures=\"{}\" errors=\"{}\"", t.run, t.failed, t.errored);
        prop_assert!(text.contains(&attrs), "missing {}", attrs);
    }
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("proj{i}")).collect()
}

fn manifests_from(adj: &[(usize, Vec<usize>)]) -> Vec<ProjectManifest> {
    let names = names(adj.len());
    adj.iter()
        .map(|(i, deps)| {
            let mut m = ProjectManifest::new(&names[*i], "pkg").unwrap();
            m.dependencies = deps.iter().map(|d| names[*d].clone()).collect();
            m
        })
        .collect()
}

// Random DAG: node i may depend only on nodes with smaller index.
fn dag_strategy(max_nodes: usize) -> impl Strategy<Value = Vec<(usize, Vec<usize>)>> {
    (2..=max_nodes).prop_flat_map(|n| {
        let per_node: Vec<_> = (0..n)
            .map(|i| {
                proptest::collection::btree_set(0..n, 0..n)
                    .prop_map(move |set| (i, set.into_iter().filter(|d| *d < i).collect::<Vec<_>>()))
            })
            .collect();
        per_node
    })
}

// Random graph guaranteed cyclic: a DAG plus a closing back edge.
fn cyclic_strategy(max_nodes: usize) -> impl Strategy<Value = Vec<(usize, Vec<usize>)>> {
    (dag_strategy(max_nodes), any::<proptest::sample::Index>()).prop_map(|(mut adj, idx)| {
        let n = adj.len();
        let start = idx.index(n.saturating_sub(1));
        // close a cycle start -> start+1 -> ... -> last -> start
        for i in start..n - 1 {
            if !adj[i + 1].1.contains(&i) {
                adj[i + 1].1.push(i);
            }
        }
        if !adj[start].1.contains(&(n - 1)) {
            adj[start].1.push(n - 1);
        }
        adj
    })
}

// Emits balanced bracket structures with benign filler, by construction.
fn balanced_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("assert 1 == 1".to_string()),
        Just("\"quoted ( [ { text\"".to_string()),
        Just("# comment".to_string()),
    ];
    leaf.prop_recursive(4, 32, 4, |inner| {
        proptest::collection::vec(inner, 0..4).prop_map(|parts| {
            let body = parts.join("\n");
            format!("block {{\n{body}\n}} ([])")
        })
    })
    .prop_map(|s| format!("{s}\n"))
}
