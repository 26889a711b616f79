//! Multi-sorted formula language: syntax, parsing, printing and normal forms.

mod ast;
mod dnf;
mod parse;
mod print;
mod qnf;

pub use ast::{is_var_name, Atom, CmpOp, Formula, LinAtom, LinExpr, Sort, Term, Var};
pub use dnf::{normalize_conj, to_dnf, to_dnf_capped, Dnf, Literal, DEFAULT_LITERAL_CAP};
pub use parse::{parse, parse_term, parse_with, ParseOptions};
pub use qnf::{mask_term, minterm, normal_form_mask, q_term_normal_forms, MAX_NORMAL_FORM_VARS};
