//! The network description language: a line-oriented text format and its
//! compiler to a runnable program.
//!
//! Grammar (`#` starts a comment, blank lines are skipped):
//!
//! ```text
//! type <name> arity <k> in <kind>*k out <kind> transform <tname>[(<params>)]
//! neuron <type>.<copy>
//! weight <type>.<copy>.<slot> <- <type>.<copy> <coefficient>
//! init <type>.<copy> <value-literal>
//! updater <type>.<copy>
//! watch <type>.<copy>
//! ```
//!
//! Kinds are `scalar`, `vector<d>`, `sample<space>`, and `matrix`. Types
//! must be declared before use; neuron copies are auto-declared on first
//! use, so `neuron` lines are optional documentation. Every diagnostic
//! carries a 1-based line and column.

use crate::engine::MachineState;
use crate::error::{Error, Result};
use crate::literal;
use crate::network::{NetworkMatrix, NeuronType, OutputPortId, Signature, Violation};
use crate::stream::StreamValue;
use crate::transform::{BuildRequest, TransformRegistry};
use std::collections::{BTreeMap, BTreeSet};

/// A compiled network: everything a machine needs except the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub signature: Signature,
    pub matrix: NetworkMatrix,
    pub initial_outputs: BTreeMap<OutputPortId, StreamValue>,
    pub updater: Option<OutputPortId>,
    pub watch: Vec<OutputPortId>,
}

impl Program {
    /// Builds a machine at tick 0 from this program and a seed.
    pub fn machine(&self, seed: u64) -> Result<MachineState> {
        MachineState::init(
            self.signature.clone(),
            self.matrix.clone(),
            self.initial_outputs.clone(),
            self.updater.clone(),
            seed,
        )
    }
}

/// One token of a line, with its 1-based column and byte offset.
struct Token<'a> {
    column: u32,
    byte: usize,
    text: &'a str,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut column = 0u32;
    let mut chars = line.char_indices().peekable();
    while let Some((byte, c)) = chars.next() {
        column += 1;
        if c.is_whitespace() {
            continue;
        }
        let start_column = column;
        let mut end = byte + c.len_utf8();
        while let Some(&(next_byte, next)) = chars.peek() {
            if next.is_whitespace() {
                break;
            }
            chars.next();
            column += 1;
            end = next_byte + next.len_utf8();
        }
        tokens.push(Token {
            column: start_column,
            byte,
            text: &line[byte..end],
        });
    }
    tokens
}

/// Column just past the last token, for end-of-line diagnostics.
fn end_column(tokens: &[Token]) -> u32 {
    tokens
        .last()
        .map(|t| t.column + t.text.chars().count() as u32)
        .unwrap_or(1)
}

struct Parser<'a> {
    registry: &'a TransformRegistry,
    types: BTreeMap<String, NeuronType>,
    matrix: NetworkMatrix,
    declared_weights: BTreeSet<String>,
    initial_outputs: BTreeMap<OutputPortId, StreamValue>,
    updater: Option<OutputPortId>,
    watch: Vec<OutputPortId>,
}

/// Parses a network description. On success the compiled program
/// validates cleanly; on failure the diagnostic names a line and column.
pub fn parse_program(text: &str, registry: &TransformRegistry) -> Result<Program> {
    let mut parser = Parser {
        registry,
        types: BTreeMap::new(),
        matrix: NetworkMatrix::new(),
        declared_weights: BTreeSet::new(),
        initial_outputs: BTreeMap::new(),
        updater: None,
        watch: Vec::new(),
    };

    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index as u32 + 1;
        let content = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        let tokens = tokenize(content);
        if tokens.is_empty() {
            continue;
        }
        parser.line(line_no, content, &tokens)?;
    }

    if parser.types.is_empty() {
        return Err(Error::parse(1, 1, "empty signature: no type declarations"));
    }
    let signature = Signature::new(parser.types.into_values().collect())
        .expect("duplicate types are rejected per line");
    Ok(Program {
        signature,
        matrix: parser.matrix,
        initial_outputs: parser.initial_outputs,
        updater: parser.updater,
        watch: parser.watch,
    })
}

impl Parser<'_> {
    fn line(&mut self, line: u32, content: &str, tokens: &[Token]) -> Result<()> {
        let head = &tokens[0];
        match head.text {
            "type" => self.type_line(line, content, tokens),
            "neuron" => self.neuron_line(line, tokens),
            "weight" => self.weight_line(line, tokens),
            "init" => self.init_line(line, content, tokens),
            "updater" => self.updater_line(line, tokens),
            "watch" => self.watch_line(line, tokens),
            other => Err(Error::parse(
                line,
                head.column,
                format!("unknown directive `{other}`"),
            )),
        }
    }

    fn token<'t>(
        &self,
        line: u32,
        tokens: &'t [Token],
        index: usize,
        what: &str,
    ) -> Result<&'t Token<'t>> {
        tokens
            .get(index)
            .ok_or_else(|| Error::parse(line, end_column(tokens), format!("expected {what}")))
    }

    fn keyword(&self, line: u32, tokens: &[Token], index: usize, word: &str) -> Result<()> {
        let token = self.token(line, tokens, index, &format!("`{word}`"))?;
        if token.text != word {
            return Err(Error::parse(
                line,
                token.column,
                format!("expected `{word}`, found `{}`", token.text),
            ));
        }
        Ok(())
    }

    fn no_trailing(&self, line: u32, tokens: &[Token], used: usize) -> Result<()> {
        match tokens.get(used) {
            None => Ok(()),
            Some(extra) => Err(Error::parse(
                line,
                extra.column,
                format!("unexpected token `{}`", extra.text),
            )),
        }
    }

    fn type_line(&mut self, line: u32, content: &str, tokens: &[Token]) -> Result<()> {
        let name_token = self.token(line, tokens, 1, "type name")?;
        let name = name_token.text;
        if !literal::is_identifier(name) {
            return Err(Error::parse(
                line,
                name_token.column,
                format!("invalid type name `{name}`"),
            ));
        }
        if self.types.contains_key(name) {
            return Err(Error::parse(
                line,
                name_token.column,
                format!("type {name} is already declared"),
            ));
        }

        self.keyword(line, tokens, 2, "arity")?;
        let arity_token = self.token(line, tokens, 3, "arity count")?;
        let arity = literal::parse_u32(arity_token.text)
            .map_err(|m| Error::parse(line, arity_token.column, m))? as usize;

        let mut cursor = 4;
        let mut input_kinds = Vec::with_capacity(arity);
        if arity > 0 {
            self.keyword(line, tokens, cursor, "in")?;
            cursor += 1;
            for _ in 0..arity {
                let kind_token = self.token(line, tokens, cursor, "input kind")?;
                let kind = literal::parse_kind(kind_token.text)
                    .map_err(|m| Error::parse(line, kind_token.column, m))?;
                input_kinds.push(kind);
                cursor += 1;
            }
        }

        self.keyword(line, tokens, cursor, "out")?;
        cursor += 1;
        let out_token = self.token(line, tokens, cursor, "output kind")?;
        let output_kind = literal::parse_kind(out_token.text)
            .map_err(|m| Error::parse(line, out_token.column, m))?;
        cursor += 1;

        self.keyword(line, tokens, cursor, "transform")?;
        cursor += 1;
        let spec_token = self.token(line, tokens, cursor, "transform name")?;
        // Parameters may contain spaces, so the transform spec is the rest of the line.
        let spec = content[spec_token.byte..].trim_end();
        let (transform_name, params) =
            split_transform_spec(spec).map_err(|m| Error::parse(line, spec_token.column, m))?;

        let request = BuildRequest {
            type_name: name,
            input_kinds: &input_kinds,
            output_kind: &output_kind,
            params,
        };
        let transform = self
            .registry
            .build(transform_name, &request)
            .map_err(|m| Error::parse(line, spec_token.column, m))?;
        let neuron_type = NeuronType::new(name, input_kinds, output_kind, transform)
            .map_err(|e| Error::parse(line, name_token.column, e.to_string()))?;
        self.types.insert(name.to_string(), neuron_type);
        Ok(())
    }

    fn output_port(&self, line: u32, token: &Token) -> Result<OutputPortId> {
        let port = literal::parse_output_port(token.text)
            .map_err(|m| Error::parse(line, token.column, m))?;
        if !self.types.contains_key(&port.type_name) {
            return Err(Error::parse(
                line,
                token.column,
                Violation::UnknownType {
                    port: port.to_string(),
                    type_name: port.type_name.clone(),
                }
                .to_string(),
            ));
        }
        Ok(port)
    }

    fn neuron_line(&mut self, line: u32, tokens: &[Token]) -> Result<()> {
        let token = self.token(line, tokens, 1, "neuron copy")?;
        self.output_port(line, token)?;
        self.no_trailing(line, tokens, 2)
    }

    fn weight_line(&mut self, line: u32, tokens: &[Token]) -> Result<()> {
        let input_token = self.token(line, tokens, 1, "input port")?;
        let input = literal::parse_input_port(input_token.text)
            .map_err(|m| Error::parse(line, input_token.column, m))?;
        self.keyword(line, tokens, 2, "<-")?;
        let output_token = self.token(line, tokens, 3, "output port")?;
        let output = self.output_port(line, output_token)?;
        let coeff_token = self.token(line, tokens, 4, "coefficient")?;
        let coefficient = literal::parse_f64(coeff_token.text)
            .map_err(|m| Error::parse(line, coeff_token.column, m))?;
        self.no_trailing(line, tokens, 5)?;

        let input_type = self.types.get(&input.type_name).ok_or_else(|| {
            Error::parse(
                line,
                input_token.column,
                Violation::UnknownType {
                    port: input.to_string(),
                    type_name: input.type_name.clone(),
                }
                .to_string(),
            )
        })?;
        if input.slot as usize >= input_type.arity() {
            return Err(Error::parse(
                line,
                input_token.column,
                Violation::SlotOutOfRange {
                    input: input.clone(),
                    arity: input_type.arity(),
                }
                .to_string(),
            ));
        }
        let input_kind = &input_type.input_kinds()[input.slot as usize];
        let output_kind = self.types[&output.type_name].output_kind();
        if input_kind != output_kind {
            return Err(Error::parse(
                line,
                input_token.column,
                Violation::KindMismatch {
                    input: input.clone(),
                    input_kind: input_kind.clone(),
                    output: output.clone(),
                    output_kind: output_kind.clone(),
                }
                .to_string(),
            ));
        }

        let pair = format!("{input} <- {output}");
        if !self.declared_weights.insert(pair) {
            return Err(Error::parse(
                line,
                input_token.column,
                format!("weight {input} <- {output} is already declared"),
            ));
        }
        self.matrix.insert_entry(input, output, coefficient);
        Ok(())
    }

    fn init_line(&mut self, line: u32, content: &str, tokens: &[Token]) -> Result<()> {
        let port_token = self.token(line, tokens, 1, "output port")?;
        let port = self.output_port(line, port_token)?;
        let literal_token = self.token(line, tokens, 2, "value literal")?;
        // Vector and matrix literals may contain spaces.
        let literal_text = content[literal_token.byte..].trim_end();
        let kind = self.types[&port.type_name].output_kind();
        let value = literal::parse_value_literal(kind, literal_text)
            .map_err(|m| Error::parse(line, literal_token.column, m))?;
        if self.initial_outputs.contains_key(&port) {
            return Err(Error::parse(
                line,
                port_token.column,
                format!("init for {port} is already declared"),
            ));
        }
        self.initial_outputs.insert(port, value);
        Ok(())
    }

    fn updater_line(&mut self, line: u32, tokens: &[Token]) -> Result<()> {
        let token = self.token(line, tokens, 1, "output port")?;
        let port = self.output_port(line, token)?;
        self.no_trailing(line, tokens, 2)?;
        let kind = self.types[&port.type_name].output_kind();
        if *kind != crate::stream::StreamKind::Matrix {
            return Err(Error::parse(
                line,
                token.column,
                Violation::UpdaterNotMatrix {
                    port: port.clone(),
                    kind: kind.clone(),
                }
                .to_string(),
            ));
        }
        if self.updater.is_some() {
            return Err(Error::parse(
                line,
                token.column,
                "updater is already declared".to_string(),
            ));
        }
        self.updater = Some(port);
        Ok(())
    }

    fn watch_line(&mut self, line: u32, tokens: &[Token]) -> Result<()> {
        let token = self.token(line, tokens, 1, "output port")?;
        let port = self.output_port(line, token)?;
        self.no_trailing(line, tokens, 2)?;
        if self.watch.contains(&port) {
            return Err(Error::parse(
                line,
                token.column,
                format!("watch for {port} is already declared"),
            ));
        }
        self.watch.push(port);
        Ok(())
    }
}

/// Splits `name` or `name(params)`; empty parentheses mean no parameters.
fn split_transform_spec(spec: &str) -> std::result::Result<(&str, Option<&str>), String> {
    let (name, params) = match spec.find('(') {
        None => (spec, None),
        Some(i) => {
            let params = spec[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| format!("unterminated parameters in `{spec}`"))?;
            (
                &spec[..i],
                if params.is_empty() {
                    None
                } else {
                    Some(params)
                },
            )
        }
    };
    if !literal::is_identifier(name) {
        return Err(format!("invalid transform name `{name}`"));
    }
    Ok((name, params))
}

/// Renders a program in canonical form: types sorted by name, weights by
/// (input, output) port, inits by port, then updater and watch lines.
/// Parsing the result reproduces the program exactly.
pub fn serialize_program(program: &Program) -> String {
    let mut out = String::new();
    for ty in program.signature.types() {
        out.push_str(&format!("type {} arity {}", ty.name(), ty.arity()));
        if ty.arity() > 0 {
            out.push_str(" in");
            for kind in ty.input_kinds() {
                out.push_str(&format!(" {kind}"));
            }
        }
        out.push_str(&format!(" out {}", ty.output_kind()));
        out.push_str(&format!(" transform {}\n", transform_spec(ty)));
    }
    for (input, output, coefficient) in program.matrix.entries() {
        out.push_str(&format!("weight {input} <- {output} {coefficient}\n"));
    }
    for (port, value) in &program.initial_outputs {
        out.push_str(&format!(
            "init {port} {}\n",
            literal::render_value_literal(value)
        ));
    }
    if let Some(port) = &program.updater {
        out.push_str(&format!("updater {port}\n"));
    }
    for port in &program.watch {
        out.push_str(&format!("watch {port}\n"));
    }
    out
}

fn transform_spec(ty: &NeuronType) -> String {
    use crate::transform::ParamValue;
    let transform = ty.transform();
    let params = transform.params();
    if params.is_empty() {
        return transform.name().to_string();
    }
    let rendered: Vec<String> = params
        .values()
        .map(|p| match p {
            ParamValue::Scalar(x) => x.to_string(),
            ParamValue::TokenWeights(w) => literal::render_token_weights(w),
            ParamValue::TokenMap(m) => literal::render_token_map(m),
            ParamValue::Matrix(m) => literal::render_matrix_literal(m),
            ParamValue::Raw(s) => s.clone(),
        })
        .collect();
    format!("{}({})", transform.name(), rendered.join(","))
}
