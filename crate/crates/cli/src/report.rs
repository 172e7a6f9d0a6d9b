use serde_json::{Map, Value};

/// One output row: the text line and the same content as a JSON record.
pub struct Row {
    pub text: String,
    pub record: Map<String, Value>,
}

impl Row {
    pub fn new(text: impl Into<String>) -> Self {
        Row {
            text: text.into(),
            record: Map::new(),
        }
    }

    pub fn field(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.record.insert(key.to_string(), value.into());
        self
    }
}

/// A report is a header of effective parameters followed by rows.
pub struct Report {
    command: &'static str,
    params: Vec<(String, String)>,
    rows: Vec<Row>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            command,
            params: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn row(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let params: Map<String, Value> = self
                .params
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect();
            let records: Vec<Value> = self.rows.iter().map(|r| Value::Object(r.record.clone())).collect();
            let doc = serde_json::json!({
                "version": env!("CARGO_PKG_VERSION"),
                "command": self.command,
                "params": params,
                "records": records,
            });
            let mut out = serde_json::to_string_pretty(&doc).expect("plain JSON values");
            out.push('\n');
            return out;
        }
        let mut out = format!("# folim {} {}\n", env!("CARGO_PKG_VERSION"), self.command);
        for (k, v) in &self.params {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        for r in &self.rows {
            out.push_str(&r.text);
            out.push('\n');
        }
        out
    }
}
