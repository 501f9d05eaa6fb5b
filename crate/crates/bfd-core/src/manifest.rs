//! Project manifests (`project.xml`) and inter-project dependency ordering.
//!
//! Schema: a root `project` element with `name` and `package` attributes and
//! zero or more `dependency` children, each with a `name` attribute. Nothing
//! else is accepted.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::error::{BfdError, Result};
use crate::xml::{self, Node};

/// Project names: `[a-z][a-z0-9-]*`.
pub fn validate_project_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-'),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(BfdError::InvalidProjectName(name.to_string()))
    }
}

/// Packages: dot-separated `[a-z][a-z0-9]*` segments, at least one.
pub fn validate_package(package: &str) -> Result<()> {
    let valid_segment = |s: &str| {
        let mut chars = s.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
            && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
    };
    if !package.is_empty() && package.split('.').all(valid_segment) {
        Ok(())
    } else {
        Err(BfdError::InvalidPackage(package.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectManifest {
    pub name: String,
    pub package: String,
    pub dependencies: Vec<String>,
}

impl ProjectManifest {
    pub fn new(name: &str, package: &str) -> Result<Self> {
        validate_project_name(name)?;
        validate_package(package)?;
        Ok(ProjectManifest {
            name: name.to_string(),
            package: package.to_string(),
            dependencies: Vec::new(),
        })
    }

    /// Parse a `project.xml` document.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let root = xml::parse(text, source_name)?;
        if root.name != "project" {
            return Err(BfdError::SchemaError(root.name));
        }
        let mut name = None;
        let mut package = None;
        for (attr, value) in &root.attributes {
            match attr.as_str() {
                "name" => name = Some(value.clone()),
                "package" => package = Some(value.clone()),
                other => return Err(BfdError::SchemaError(format!("project@{other}"))),
            }
        }
        let name = name.ok_or_else(|| BfdError::SchemaError("project@name missing".into()))?;
        let package =
            package.ok_or_else(|| BfdError::SchemaError("project@package missing".into()))?;
        validate_project_name(&name)?;
        validate_package(&package)?;

        let mut dependencies = Vec::new();
        for node in &root.children {
            match node {
                Node::Text(t) if t.trim().is_empty() => {}
                Node::Text(_) => return Err(BfdError::SchemaError("text in project".into())),
                Node::Element(e) => {
                    if e.name != "dependency" {
                        return Err(BfdError::SchemaError(e.name.clone()));
                    }
                    if !e.children.iter().all(
                        |n| matches!(n, Node::Text(t) if t.trim().is_empty()),
                    ) {
                        return Err(BfdError::SchemaError("content in dependency".into()));
                    }
                    let mut dep = None;
                    for (attr, value) in &e.attributes {
                        match attr.as_str() {
                            "name" => dep = Some(value.clone()),
                            other => {
                                return Err(BfdError::SchemaError(format!("dependency@{other}")))
                            }
                        }
                    }
                    let dep = dep
                        .ok_or_else(|| BfdError::SchemaError("dependency@name missing".into()))?;
                    validate_project_name(&dep)?;
                    if dep == name {
                        return Err(BfdError::SelfDependency);
                    }
                    if dependencies.contains(&dep) {
                        return Err(BfdError::DuplicateDependency(dep));
                    }
                    dependencies.push(dep);
                }
            }
        }
        Ok(ProjectManifest {
            name,
            package,
            dependencies,
        })
    }

    /// Render back to `project.xml` text. `parse(render(m)) == m`.
    pub fn render(&self) -> String {
        let mut out = format!(
            "<project name=\"{}\" package=\"{}\"",
            xml::escape(&self.name),
            xml::escape(&self.package)
        );
        if self.dependencies.is_empty() {
            out.push_str("/>\n");
        } else {
            out.push_str(">\n");
            for dep in &self.dependencies {
                out.push_str(&format!("    <dependency name=\"{}\"/>\n", xml::escape(dep)));
            }
            out.push_str("</project>\n");
        }
        out
    }
}

/// Dependency relation across the manifests of a workspace.
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    /// dependent -> dependencies (workspace-internal only)
    edges: BTreeMap<String, Vec<String>>,
    /// dependencies named but not present in the workspace
    externals: BTreeSet<String>,
}

impl DependencyGraph {
    /// Build the graph. With `strict`, a dependency missing from the
    /// workspace is an error; otherwise it is flagged external.
    pub fn build(manifests: &[ProjectManifest], strict: bool) -> Result<Self> {
        let nodes: BTreeSet<&str> = manifests.iter().map(|m| m.name.as_str()).collect();
        let mut edges = BTreeMap::new();
        let mut externals = BTreeSet::new();
        for m in manifests {
            let mut deps = Vec::new();
            for dep in &m.dependencies {
                if nodes.contains(dep.as_str()) {
                    deps.push(dep.clone());
                } else if strict {
                    return Err(BfdError::MissingDependency(dep.clone()));
                } else {
                    externals.insert(dep.clone());
                }
            }
            edges.insert(m.name.clone(), deps);
        }
        let graph = DependencyGraph { edges, externals };
        graph.topological_order()?; // acyclicity is checked on construction
        Ok(graph)
    }

    /// Dependencies assumed delivered outside the workspace.
    pub fn externals(&self) -> impl Iterator<Item = &str> {
        self.externals.iter().map(String::as_str)
    }

    /// Deterministic topological order: dependencies before dependents, ties
    /// broken by ascending project name (the lexicographically least valid
    /// order overall).
    pub fn topological_order(&self) -> Result<Vec<String>> {
        let mut remaining_deps: BTreeMap<&str, BTreeSet<&str>> = self
            .edges
            .iter()
            .map(|(n, deps)| (n.as_str(), deps.iter().map(String::as_str).collect()))
            .collect();
        let mut dependents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (node, deps) in &self.edges {
            for dep in deps {
                dependents.entry(dep).or_default().push(node);
            }
        }

        // min-heap over names
        let mut ready: BinaryHeap<std::cmp::Reverse<&str>> = remaining_deps
            .iter()
            .filter(|(_, deps)| deps.is_empty())
            .map(|(n, _)| std::cmp::Reverse(*n))
            .collect();
        let mut order = Vec::new();
        while let Some(std::cmp::Reverse(node)) = ready.pop() {
            order.push(node.to_string());
            for dependent in dependents.get(node).cloned().unwrap_or_default() {
                let deps = remaining_deps.get_mut(dependent).unwrap();
                deps.remove(node);
                if deps.is_empty() {
                    ready.push(std::cmp::Reverse(dependent));
                }
            }
            remaining_deps.remove(node);
        }
        remaining_deps.retain(|_, deps| !deps.is_empty());
        if remaining_deps.is_empty() {
            Ok(order)
        } else {
            Err(BfdError::CycleDetected(self.find_cycle(&remaining_deps)))
        }
    }

    // Walk dependency edges among the stuck nodes until one repeats; the
    // returned path starts and ends at the same project.
    fn find_cycle(&self, stuck: &BTreeMap<&str, BTreeSet<&str>>) -> Vec<String> {
        let mut path: Vec<&str> = Vec::new();
        let mut node = *stuck.keys().next().expect("stuck set is nonempty");
        loop {
            if let Some(start) = path.iter().position(|n| *n == node) {
                let mut cycle: Vec<String> =
                    path[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(node.to_string());
                return cycle;
            }
            path.push(node);
            node = stuck[node]
                .iter()
                .find(|d| stuck.contains_key(**d))
                .expect("stuck node keeps a stuck dependency");
        }
    }
}

/// Topological build order over a set of manifests.
pub fn resolve_build_order(manifests: &[ProjectManifest], strict: bool) -> Result<Vec<String>> {
    DependencyGraph::build(manifests, strict)?.topological_order()
}
