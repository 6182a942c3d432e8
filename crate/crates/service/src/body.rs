//! Field-addressed parsing of JSON request bodies.
//!
//! Typed extractors stop at the first problem; this reader collects every
//! missing, mistyped or unknown field so a 422 can list them all.

use kisan_core::FieldError;
use serde_json::{Map, Value};

use crate::error::{ApiError, ApiResult};

pub struct BodyReader {
    prefix: String,
    obj: Map<String, Value>,
    errors: Vec<FieldError>,
}

impl BodyReader {
    pub fn parse(bytes: &[u8]) -> ApiResult<Self> {
        match serde_json::from_slice::<Value>(bytes) {
            Ok(Value::Object(obj)) => Ok(Self {
                prefix: String::new(),
                obj,
                errors: Vec::new(),
            }),
            Ok(_) => Err(ApiError::field("body", "body must be a JSON object")),
            Err(e) => Err(ApiError::field("body", format!("malformed JSON: {e}"))),
        }
    }

    fn path(&self, name: &str) -> String {
        format!("{}{name}", self.prefix)
    }

    fn error(&mut self, name: &str, message: String) {
        let field = self.path(name);
        self.errors.push(FieldError::new(field, message));
    }

    pub fn has(&self, name: &str) -> bool {
        self.obj.contains_key(name)
    }

    /// Records an error for every key outside `allowed`.
    pub fn reject_unknown(&mut self, allowed: &[&str]) {
        let unknown: Vec<String> = self
            .obj
            .keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .cloned()
            .collect();
        for k in unknown {
            self.error(&k, format!("unknown field '{}'", self.path(&k)));
        }
    }

    pub fn opt_number(&mut self, name: &str) -> Option<f64> {
        match self.obj.get(name) {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => n.as_f64(),
            Some(_) => {
                self.error(name, format!("{} must be a number", self.path(name)));
                None
            }
        }
    }

    /// Required number; NaN stands in after recording an error.
    pub fn number(&mut self, name: &str) -> f64 {
        if !self.has(name) {
            self.error(name, format!("{} is required", self.path(name)));
            return f64::NAN;
        }
        self.opt_number(name).unwrap_or(f64::NAN)
    }

    pub fn opt_integer(&mut self, name: &str) -> Option<i64> {
        match self.obj.get(name) {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) if n.as_i64().is_some() => n.as_i64(),
            Some(_) => {
                self.error(name, format!("{} must be an integer", self.path(name)));
                None
            }
        }
    }

    pub fn string(&mut self, name: &str) -> String {
        match self.obj.get(name) {
            Some(Value::String(s)) => s.clone(),
            None | Some(Value::Null) => {
                self.error(name, format!("{} is required", self.path(name)));
                String::new()
            }
            Some(_) => {
                self.error(name, format!("{} must be a string", self.path(name)));
                String::new()
            }
        }
    }

    /// Nested object reader; its errors carry `name.` as a prefix and are
    /// merged back by [`BodyReader::absorb`].
    pub fn opt_object(&mut self, name: &str) -> Option<BodyReader> {
        match self.obj.get(name) {
            None | Some(Value::Null) => None,
            Some(Value::Object(obj)) => Some(BodyReader {
                prefix: format!("{}.", self.path(name)),
                obj: obj.clone(),
                errors: Vec::new(),
            }),
            Some(_) => {
                self.error(name, format!("{} must be an object", self.path(name)));
                None
            }
        }
    }

    /// Array of object readers, prefixed `name[i].`.
    pub fn object_array(&mut self, name: &str) -> Vec<BodyReader> {
        match self.obj.get(name) {
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::Object(obj) => out.push(BodyReader {
                            prefix: format!("{}[{i}].", self.path(name)),
                            obj: obj.clone(),
                            errors: Vec::new(),
                        }),
                        _ => {
                            let field = format!("{}[{i}]", self.path(name));
                            self.errors
                                .push(FieldError::new(field.clone(), format!("{field} must be an object")));
                        }
                    }
                }
                out
            }
            None => {
                self.error(name, format!("{} is required", self.path(name)));
                Vec::new()
            }
            Some(_) => {
                self.error(name, format!("{} must be an array", self.path(name)));
                Vec::new()
            }
        }
    }

    pub fn absorb(&mut self, child: BodyReader) {
        self.errors.extend(child.errors);
    }

    pub fn push(&mut self, err: FieldError) {
        self.errors.push(err);
    }

    pub fn finish(self) -> ApiResult<()> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(ApiError::validation(self.errors))
        }
    }
}
