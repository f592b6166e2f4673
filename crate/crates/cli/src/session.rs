//! On-disk session state: a directory of plain text artifacts. Every command
//! loads the artifacts fresh, works on them, and rewrites them whole, so the
//! session survives crashes and stays inspectable with ordinary tools.

use doxa_core::inference::{evidence_to_text, parse_evidence_text, Evidence};
use doxa_core::network::{parse_net_text, to_net_text, BayesNet};
use doxa_core::schema_kb::{parse_kb, KnowledgeBase};
use doxa_core::{frames_to_text, parse_frames_text, ArgumentFrame, ErrorKind};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const KB_FILE: &str = "kb.kb";
pub const FRAMES_FILE: &str = "frames.txt";
pub const NET_FILE: &str = "net.net";
pub const EVIDENCE_FILE: &str = "evidence.ev";
pub const TRANSCRIPT_FILE: &str = "transcript.log";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] doxa_core::Error),

    #[error("{0}")]
    State(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Parse => 10,
                ErrorKind::Compile => 11,
                ErrorKind::Inference => 12,
                ErrorKind::Revision => 13,
            },
            CliError::State(_) => 14,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub struct Session {
    pub dir: PathBuf,
    pub kb: KnowledgeBase,
    pub frames: Vec<ArgumentFrame>,
    pub net: BayesNet,
    pub evidence: Evidence,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| CliError::io(path, e))
}

impl Session {
    /// Starts a session over freshly built state, resetting any evidence a
    /// previous model left behind. The transcript is preserved: rebuilding
    /// is part of the dialogue, not a new one.
    pub fn initialize(
        dir: &Path,
        kb: KnowledgeBase,
        frames: Vec<ArgumentFrame>,
        net: BayesNet,
    ) -> Result<Session> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let session = Session {
            dir: dir.to_path_buf(),
            kb,
            frames,
            net,
            evidence: Evidence::new(),
        };
        write(&dir.join(KB_FILE), &session.kb.to_string())?;
        session.save_model()?;
        session.save_evidence()?;
        let transcript = dir.join(TRANSCRIPT_FILE);
        if !transcript.exists() {
            write(&transcript, "")?;
        }
        Ok(session)
    }

    pub fn load(dir: &Path) -> Result<Session> {
        let kb_path = dir.join(KB_FILE);
        if !kb_path.exists() {
            return Err(CliError::State(format!(
                "no session at `{}`; run `doxa build` first",
                dir.display()
            )));
        }
        let kb = parse_kb(&read(&kb_path)?, &kb_path.display().to_string())?;
        let frames_path = dir.join(FRAMES_FILE);
        let frames = parse_frames_text(&read(&frames_path)?, &frames_path.display().to_string())?;
        let net_path = dir.join(NET_FILE);
        let net = parse_net_text(&read(&net_path)?, &net_path.display().to_string())?;
        let ev_path = dir.join(EVIDENCE_FILE);
        let evidence = parse_evidence_text(&read(&ev_path)?, &ev_path.display().to_string())?;
        evidence.check_against(&net)?;
        Ok(Session {
            dir: dir.to_path_buf(),
            kb,
            frames,
            net,
            evidence,
        })
    }

    pub fn save_model(&self) -> Result<()> {
        write(&self.dir.join(FRAMES_FILE), &frames_to_text(&self.frames))?;
        write(&self.dir.join(NET_FILE), &to_net_text(&self.net))
    }

    pub fn save_evidence(&self) -> Result<()> {
        write(&self.dir.join(EVIDENCE_FILE), &evidence_to_text(&self.evidence))
    }

    /// Appends one `$ command` entry with its output, terminated by a blank
    /// line, so the transcript replays the session verbatim.
    pub fn append_transcript(dir: &Path, command: &str, output: &str) -> Result<()> {
        let path = dir.join(TRANSCRIPT_FILE);
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| CliError::io(&path, e))?;
        let mut entry = format!("$ {command}\n{output}");
        if !entry.ends_with('\n') {
            entry.push('\n');
        }
        entry.push('\n');
        file.write_all(entry.as_bytes())
            .map_err(|e| CliError::io(&path, e))
    }
}
