use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

/// An ordered chat history. After an optional leading system message, roles
/// strictly alternate user/assistant starting with user.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    messages: Vec<Message>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("transcript role order violated at message {index}: expected {expected:?}, got {got:?}")]
pub struct RoleOrderError {
    pub index: usize,
    pub expected: Role,
    pub got: Role,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_system(system: impl Into<String>) -> Self {
        Transcript {
            messages: vec![Message {
                role: Role::System,
                content: system.into(),
            }],
        }
    }

    pub fn from_messages(messages: Vec<Message>) -> Result<Self, RoleOrderError> {
        let t = Transcript { messages };
        t.check()?;
        Ok(t)
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn system(&self) -> Option<&str> {
        self.messages
            .first()
            .filter(|m| m.role == Role::System)
            .map(|m| m.content.as_str())
    }

    /// Messages after the optional system prompt.
    pub fn turns(&self) -> &[Message] {
        match self.messages.first() {
            Some(m) if m.role == Role::System => &self.messages[1..],
            _ => &self.messages,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.turns().is_empty()
    }

    pub fn last(&self) -> Option<&Message> {
        self.messages.last()
    }

    fn expected_next(&self) -> Role {
        match self.messages.last().map(|m| m.role) {
            None | Some(Role::System) | Some(Role::Assistant) => Role::User,
            Some(Role::User) => Role::Assistant,
        }
    }

    /// Appends a user message.
    ///
    /// # Panics
    /// If the last message is already a user message.
    pub fn push_user(&mut self, content: impl Into<String>) {
        self.push(Role::User, content.into()).expect("user message out of turn");
    }

    /// Appends an assistant message.
    ///
    /// # Panics
    /// If the last message is not a user message.
    pub fn push_assistant(&mut self, content: impl Into<String>) {
        self.push(Role::Assistant, content.into()).expect("assistant message out of turn");
    }

    pub fn push(&mut self, role: Role, content: String) -> Result<(), RoleOrderError> {
        let expected = self.expected_next();
        if role != expected {
            return Err(RoleOrderError {
                index: self.messages.len(),
                expected,
                got: role,
            });
        }
        self.messages.push(Message { role, content });
        Ok(())
    }

    pub fn check(&self) -> Result<(), RoleOrderError> {
        let mut rebuilt = Transcript::new();
        for (index, m) in self.messages.iter().enumerate() {
            if m.role == Role::System && index == 0 {
                rebuilt.messages.push(m.clone());
                continue;
            }
            rebuilt.push(m.role, m.content.clone()).map_err(|e| RoleOrderError { index, ..e })?;
        }
        Ok(())
    }
}
