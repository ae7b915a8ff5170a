use padicslice::Ambient;

use crate::spec_file::{AmbientRecord, VarietyFile};

pub struct Builtin {
    pub name: &'static str,
    pub summary: &'static str,
    ambient: Ambient,
    variables: &'static [&'static str],
    polynomials: &'static [&'static str],
    dimension: usize,
    degree: u64,
}

pub const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "elliptic",
        summary: "affine cubic curve y^2 = x^3 + 1",
        ambient: Ambient::Affine,
        variables: &["x", "y"],
        polynomials: &["y^2 - x^3 - 1"],
        dimension: 1,
        degree: 3,
    },
    Builtin {
        name: "sl2",
        summary: "the group SL(2) as ad - bc = 1 in A^4",
        ambient: Ambient::Affine,
        variables: &["a", "b", "c", "d"],
        polynomials: &["a*d - b*c - 1"],
        dimension: 3,
        degree: 2,
    },
    Builtin {
        name: "pline",
        summary: "the line x0 + x1 + x2 = 0 in P^2",
        ambient: Ambient::Projective,
        variables: &["x0", "x1", "x2"],
        polynomials: &["x0 + x1 + x2"],
        dimension: 1,
        degree: 1,
    },
    Builtin {
        name: "conic",
        summary: "the conic x0*x2 = x1^2 in P^2",
        ambient: Ambient::Projective,
        variables: &["x0", "x1", "x2"],
        polynomials: &["x0*x2 - x1^2"],
        dimension: 1,
        degree: 2,
    },
];

impl Builtin {
    pub fn file(&self) -> VarietyFile {
        VarietyFile {
            name: self.name.to_string(),
            ambient: AmbientRecord { kind: self.ambient, n_vars: self.variables.len() },
            variables: self.variables.iter().map(|s| s.to_string()).collect(),
            polynomials: self.polynomials.iter().map(|s| s.to_string()).collect(),
            dimension: self.dimension,
            degree: Some(self.degree),
        }
    }
}

pub fn find(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}
