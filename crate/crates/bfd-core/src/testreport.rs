//! Test execution for the sim toolchain and report rendering.
//!
//! A sim test file is a suite: each line of the form `assert <int> <op> <int>`
//! is one test case, blank and `#` comment lines are skipped, and anything
//! else is recorded as an error case. Results render to the xUnit-style XML
//! report and an HTML summary tree.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use walkdir::WalkDir;

use crate::error::{BfdError, Result};
use crate::xml;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestOutcome {
    Pass,
    Fail { message: String, location: String },
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCaseResult {
    pub suite: String,
    pub test: String,
    pub outcome: TestOutcome,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSuiteReport {
    pub project: String,
    pub cases: Vec<TestCaseResult>,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Totals {
    pub run: usize,
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
}

impl TestSuiteReport {
    pub fn totals(&self) -> Totals {
        let mut t = Totals {
            run: self.cases.len(),
            passed: 0,
            failed: 0,
            errored: 0,
        };
        for case in &self.cases {
            match case.outcome {
                TestOutcome::Pass => t.passed += 1,
                TestOutcome::Fail { .. } => t.failed += 1,
                TestOutcome::Error { .. } => t.errored += 1,
            }
        }
        t
    }

    pub fn success(&self) -> bool {
        let t = self.totals();
        t.failed + t.errored == 0
    }

    /// The text-runner console summary: a progress line, the timing line and
    /// either `OK (N tests)` or `FAILURES!!!` with counts.
    pub fn console_summary(&self) -> String {
        let mut dots = String::new();
        for case in &self.cases {
            dots.push(match case.outcome {
                TestOutcome::Pass => '.',
                TestOutcome::Fail { .. } => 'F',
                TestOutcome::Error { .. } => 'E',
            });
        }
        let t = self.totals();
        let mut out = format!("{dots}\nTime: {:.3}\n\n", self.duration);
        if self.success() {
            out.push_str(&format!("OK ({} tests)\n", t.run));
        } else {
            out.push_str(&format!(
                "FAILURES!!!\nTests run: {},  Failures: {},  Errors: {}\n",
                t.run, t.failed, t.errored
            ));
        }
        out
    }
}

/// Evaluate one assert line; `None` for blank/comment lines.
pub fn evaluate_line(line: &str) -> Option<TestOutcome> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return None;
    }
    let malformed = || TestOutcome::Error {
        message: format!("malformed test line: {trimmed}"),
    };
    let mut parts = trimmed.split_whitespace();
    if parts.next() != Some("assert") {
        return Some(malformed());
    }
    let (Some(lhs), Some(op), Some(rhs), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Some(malformed());
    };
    let (Ok(a), Ok(b)) = (lhs.parse::<i64>(), rhs.parse::<i64>()) else {
        return Some(malformed());
    };
    let holds = match op {
        "==" => a == b,
        "!=" => a != b,
        "<" => a < b,
        "<=" => a <= b,
        ">" => a > b,
        ">=" => a >= b,
        _ => return Some(malformed()),
    };
    Some(if holds {
        TestOutcome::Pass
    } else {
        TestOutcome::Fail {
            message: format!("assertion failed: {a} {op} {b}"),
            location: String::new(),
        }
    })
}

/// Discover and run every `*Test.<ext>` suite under `src/**/test/`.
pub fn run_sim_tests(project: &str, project_root: &Path, ext: &str) -> Result<TestSuiteReport> {
    let started = Instant::now();
    let mut cases = Vec::new();
    let src = project_root.join("src");
    let suffix = format!("Test.{ext}");
    let mut suite_files: Vec<PathBuf> = WalkDir::new(&src)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| {
            e.file_type().is_file()
                && e.file_name().to_string_lossy().ends_with(&suffix)
                && e.path()
                    .parent()
                    .and_then(|p| p.file_name())
                    .is_some_and(|n| n == "test")
        })
        .map(|e| e.into_path())
        .collect();
    suite_files.sort();

    for file in suite_files {
        let suite = file
            .file_name()
            .unwrap()
            .to_string_lossy()
            .trim_end_matches(&format!(".{ext}"))
            .to_string();
        let text = fs::read_to_string(&file)
            .map_err(|e| BfdError::io(format!("reading {}", file.display()), e))?;
        for (idx, line) in text.lines().enumerate() {
            let case_started = Instant::now();
            if let Some(mut outcome) = evaluate_line(line) {
                if let TestOutcome::Fail { location, .. } = &mut outcome {
                    *location = format!("{suite}:{}", idx + 1);
                }
                cases.push(TestCaseResult {
                    suite: suite.clone(),
                    test: format!("line-{}", idx + 1),
                    outcome,
                    duration: case_started.elapsed().as_secs_f64(),
                });
            }
        }
    }
    // deterministic merge order: suite name, then position
    cases.sort_by(|a, b| a.suite.cmp(&b.suite).then(a.test.len().cmp(&b.test.len())).then(a.test.cmp(&b.test)));
    Ok(TestSuiteReport {
        project: project.to_string(),
        cases,
        duration: started.elapsed().as_secs_f64(),
    })
}

/// Write `build/test-reports/<project>.xml` under `project_root`.
///
/// Attribute order on `testsuite` is fixed (name, tests, failures, errors,
/// time) so identical reports serialize to identical bytes.
pub fn write_xml_report(report: &TestSuiteReport, project_root: &Path) -> Result<PathBuf> {
    let dir = project_root.join("build").join("test-reports");
    fs::create_dir_all(&dir).map_err(|e| BfdError::io(format!("creating {}", dir.display()), e))?;
    let path = dir.join(format!("{}.xml", report.project));
    fs::write(&path, render_xml(report))
        .map_err(|e| BfdError::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}

pub fn render_xml(report: &TestSuiteReport) -> String {
    let t = report.totals();
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<testsuite name=\"{}\" tests=\"{}\" failures=\"{}\" errors=\"{}\" time=\"{:.3}\">\n",
        xml::escape(&report.project),
        t.run,
        t.failed,
        t.errored,
        report.duration
    ));
    for case in &report.cases {
        out.push_str(&format!(
            "  <testcase suite=\"{}\" name=\"{}\" time=\"{:.3}\"",
            xml::escape(&case.suite),
            xml::escape(&case.test),
            case.duration
        ));
        match &case.outcome {
            TestOutcome::Pass => out.push_str("/>\n"),
            TestOutcome::Fail { message, location } => out.push_str(&format!(
                ">\n    <failure message=\"{}\" location=\"{}\"/>\n  </testcase>\n",
                xml::escape(message),
                xml::escape(location)
            )),
            TestOutcome::Error { message } => out.push_str(&format!(
                ">\n    <error message=\"{}\"/>\n  </testcase>\n",
                xml::escape(message)
            )),
        }
    }
    out.push_str("</testsuite>\n");
    out
}

/// Parse an emitted XML report back into a report value.
pub fn parse_xml_report(path: &Path) -> Result<TestSuiteReport> {
    let text =
        fs::read_to_string(path).map_err(|_| BfdError::MalformedReport(path.to_path_buf()))?;
    let root = xml::parse(&text, &path.display().to_string())
        .map_err(|_| BfdError::MalformedReport(path.to_path_buf()))?;
    if root.name != "testsuite" {
        return Err(BfdError::MalformedReport(path.to_path_buf()));
    }
    let malformed = || BfdError::MalformedReport(path.to_path_buf());
    let project = root.attr("name").ok_or_else(malformed)?.to_string();
    let duration: f64 = root
        .attr("time")
        .and_then(|t| t.parse().ok())
        .ok_or_else(malformed)?;
    let declared: usize = root
        .attr("tests")
        .and_then(|t| t.parse().ok())
        .ok_or_else(malformed)?;
    let mut cases = Vec::new();
    for case in root.child_elements() {
        if case.name != "testcase" {
            return Err(malformed());
        }
        let outcome = match case.child_elements().next() {
            None => TestOutcome::Pass,
            Some(e) if e.name == "failure" => TestOutcome::Fail {
                message: e.attr("message").unwrap_or_default().to_string(),
                location: e.attr("location").unwrap_or_default().to_string(),
            },
            Some(e) if e.name == "error" => TestOutcome::Error {
                message: e.attr("message").unwrap_or_default().to_string(),
            },
            Some(_) => return Err(malformed()),
        };
        cases.push(TestCaseResult {
            suite: case.attr("suite").unwrap_or_default().to_string(),
            test: case.attr("name").ok_or_else(malformed)?.to_string(),
            outcome,
            duration: case.attr("time").and_then(|t| t.parse().ok()).unwrap_or(0.0),
        });
    }
    if cases.len() != declared {
        return Err(malformed());
    }
    Ok(TestSuiteReport {
        project,
        cases,
        duration,
    })
}

/// Render `index.html` plus one page per suite report into `out_dir`.
/// Returns the index path.
pub fn render_html_report(xml_paths: &[PathBuf], out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)
        .map_err(|e| BfdError::io(format!("creating {}", out_dir.display()), e))?;
    let mut reports = Vec::new();
    for path in xml_paths {
        reports.push(parse_xml_report(path)?);
    }
    reports.sort_by(|a, b| a.project.cmp(&b.project));

    let mut index = String::from(
        "<html><head><title>Test results</title></head><body>\n<h1>Test results</h1>\n",
    );
    if reports.is_empty() {
        index.push_str("<p>no tests</p>\n");
    } else {
        index.push_str(
            "<table border=\"1\">\n<tr><th>Suite</th><th>Tests</th><th>Failures</th><th>Errors</th></tr>\n",
        );
        let (mut run, mut failed, mut errored) = (0, 0, 0);
        for report in &reports {
            let t = report.totals();
            run += t.run;
            failed += t.failed;
            errored += t.errored;
            index.push_str(&format!(
                "<tr><td><a href=\"{p}.html\">{p}</a></td><td>{}</td><td>{}</td><td>{}</td></tr>\n",
                t.run,
                t.failed,
                t.errored,
                p = xml::escape(&report.project)
            ));
            write_suite_page(report, out_dir)?;
        }
        index.push_str(&format!(
            "<tr><th>total</th><th>{run}</th><th>{failed}</th><th>{errored}</th></tr>\n</table>\n"
        ));
    }
    index.push_str("</body></html>\n");
    let index_path = out_dir.join("index.html");
    fs::write(&index_path, index)
        .map_err(|e| BfdError::io(format!("writing {}", index_path.display()), e))?;
    Ok(index_path)
}

fn write_suite_page(report: &TestSuiteReport, out_dir: &Path) -> Result<()> {
    let mut page = format!(
        "<html><head><title>{p}</title></head><body>\n<h1>{p}</h1>\n<table border=\"1\">\n<tr><th>Suite</th><th>Test</th><th>Outcome</th></tr>\n",
        p = xml::escape(&report.project)
    );
    for case in &report.cases {
        let outcome = match &case.outcome {
            TestOutcome::Pass => "pass".to_string(),
            TestOutcome::Fail { message, .. } => format!(
                "<b style=\"color:red\">FAIL</b>: {}",
                xml::escape(message)
            ),
            TestOutcome::Error { message } => format!(
                "<b style=\"color:red\">ERROR</b>: {}",
                xml::escape(message)
            ),
        };
        page.push_str(&format!(
            "<tr><td>{}</td><td>{}</td><td>{}</td></tr>\n",
            xml::escape(&case.suite),
            xml::escape(&case.test),
            outcome
        ));
    }
    page.push_str("</table>\n</body></html>\n");
    let path = out_dir.join(format!("{}.html", report.project));
    fs::write(&path, page).map_err(|e| BfdError::io(format!("writing {}", path.display()), e))
}
