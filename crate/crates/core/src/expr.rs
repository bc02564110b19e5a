//! Arithmetic expressions over named variables, used by declarative problem
//! files. Available functions: `cos`, `sin`, `exp`, `sqrt`, `abs`, `sum`,
//! `prod`; the constant `pi` is predefined.

use std::collections::HashMap;

use evalexpr::{build_operator_tree, Context, DefaultNumericTypes, EvalexprError, EvalexprResult, Node, Value};

use crate::error::{Error, Result};

const FUNCTIONS: [&str; 7] = ["cos", "sin", "exp", "sqrt", "abs", "sum", "prod"];

#[derive(Clone, Debug)]
pub struct Expression {
    source: String,
    node: Node<DefaultNumericTypes>,
    index: HashMap<String, usize>,
}

struct PointContext<'a> {
    index: &'a HashMap<String, usize>,
    values: Vec<Value<DefaultNumericTypes>>,
    pi: Value<DefaultNumericTypes>,
}

fn numbers(argument: &Value<DefaultNumericTypes>) -> EvalexprResult<Vec<f64>, DefaultNumericTypes> {
    match argument {
        Value::Tuple(items) => items.iter().map(|v| v.as_number()).collect(),
        Value::Empty => Ok(Vec::new()),
        other => Ok(vec![other.as_number()?]),
    }
}

fn unary(identifier: &str, argument: &Value<DefaultNumericTypes>) -> EvalexprResult<f64, DefaultNumericTypes> {
    let v = numbers(argument)?;
    match v.as_slice() {
        [x] => Ok(*x),
        _ => Err(EvalexprError::CustomMessage(format!("{identifier} takes exactly one argument"))),
    }
}

impl Context for PointContext<'_> {
    type NumericTypes = DefaultNumericTypes;

    fn get_value(&self, identifier: &str) -> Option<&Value<DefaultNumericTypes>> {
        match self.index.get(identifier) {
            Some(i) => Some(&self.values[*i]),
            None if identifier == "pi" => Some(&self.pi),
            None => None,
        }
    }

    fn call_function(&self, identifier: &str, argument: &Value<DefaultNumericTypes>) -> EvalexprResult<Value<DefaultNumericTypes>, DefaultNumericTypes> {
        let out = match identifier {
            "cos" => unary(identifier, argument)?.cos(),
            "sin" => unary(identifier, argument)?.sin(),
            "exp" => unary(identifier, argument)?.exp(),
            "sqrt" => unary(identifier, argument)?.sqrt(),
            "abs" => unary(identifier, argument)?.abs(),
            "sum" => numbers(argument)?.iter().sum(),
            "prod" => numbers(argument)?.iter().product(),
            _ => return Err(EvalexprError::FunctionIdentifierNotFound(identifier.to_string())),
        };
        Ok(Value::Float(out))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        true
    }

    fn set_builtin_functions_disabled(&mut self, _disabled: bool) -> EvalexprResult<(), DefaultNumericTypes> {
        Err(EvalexprError::ContextNotMutable)
    }
}

impl Expression {
    /// Parses `source`; every identifier it reads must be one of
    /// `variables` or `pi`.
    pub fn parse(source: &str, variables: &[String]) -> Result<Self> {
        let node = build_operator_tree::<DefaultNumericTypes>(source).map_err(|e| Error::Expression(format!("{source:?}: {e}")))?;
        let index: HashMap<String, usize> = variables.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        if let Some(unknown) = node.iter_variable_identifiers().find(|v| !index.contains_key(*v) && *v != "pi") {
            return Err(Error::Expression(format!("{source:?}: unknown variable {unknown:?}")));
        }
        if let Some(f) = node.iter_function_identifiers().find(|f| !FUNCTIONS.contains(f)) {
            return Err(Error::Expression(format!("{source:?}: unknown function {f:?}")));
        }
        Ok(Self { source: source.to_string(), node, index })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.index.len() {
            return Err(Error::DimensionMismatch { expected: self.index.len(), got: x.len() });
        }
        let ctx = PointContext { index: &self.index, values: x.iter().map(|v| Value::Float(*v)).collect(), pi: Value::Float(std::f64::consts::PI) };
        self.node
            .eval_with_context(&ctx)
            .and_then(|v| v.as_number())
            .map_err(|e| Error::Expression(format!("{:?}: {e}", self.source)))
    }
}
