//! Full-mesh TCP fabric for multi-process runs.
//!
//! Every rank binds the address its rank-file line names, then connects to
//! all lower ranks and accepts from all higher ones (so rank 0 only
//! accepts). A two-byte rank id opens each connection. Per peer there is one
//! writer thread draining an unbounded local queue and one reader thread
//! framing messages into a shared inbox, which keeps `send_async` free of
//! remote blocking and preserves per-pair FIFO (one ordered stream per pair,
//! one producer per stream).

use super::{
    decode_frame, encode_frame, Message, Rank, Transport, TransportError, HEADER_LEN,
    MAX_PAYLOAD_DEFAULT,
};
use std::io::{Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankFileEntry {
    pub rank: Rank,
    pub host: String,
    pub port: u16,
}

impl RankFileEntry {
    fn addr(&self) -> String {
        format!("{}:{}", self.host, self.port)
    }
}

/// Parse `rank host port` lines. Blank lines and `#` comments are fine.
/// Ranks must come out contiguous from 0 after sorting.
pub fn parse_rank_file(text: &str) -> Result<Vec<RankFileEntry>, TransportError> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let parse_err = |what: &str| {
            TransportError::RankFile(format!("line {}: {}", idx + 1, what))
        };
        let rank: Rank = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err("bad rank"))?;
        let host = tok.next().ok_or_else(|| parse_err("missing host"))?.to_string();
        let port: u16 = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err("bad port"))?;
        if tok.next().is_some() {
            return Err(parse_err("trailing tokens"));
        }
        entries.push(RankFileEntry { rank, host, port });
    }
    entries.sort_by_key(|e| e.rank);
    for (i, e) in entries.iter().enumerate() {
        if e.rank as usize != i {
            return Err(TransportError::RankFile(format!(
                "ranks are not contiguous from 0 (saw {} at position {i})",
                e.rank
            )));
        }
    }
    if entries.is_empty() {
        return Err(TransportError::RankFile("no entries".into()));
    }
    Ok(entries)
}

pub fn format_rank_file(entries: &[RankFileEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{} {} {}\n", e.rank, e.host, e.port));
    }
    out
}

enum WriterCmd {
    Frame(Vec<u8>),
    Flush(mpsc::SyncSender<()>),
    Shutdown,
}

struct Peer {
    tx: mpsc::Sender<WriterCmd>,
    stream: TcpStream,
    writer: Option<JoinHandle<()>>,
    reader: Option<JoinHandle<()>>,
}

pub struct TcpMesh {
    rank: Rank,
    peers: Vec<Option<Peer>>, // indexed by rank; self entry is None
    inbox: mpsc::Receiver<Result<Message, TransportError>>,
    closing: Arc<AtomicBool>,
    closed: bool,
}

impl TcpMesh {
    /// Join the mesh described by `entries` as `rank`. Blocks until every
    /// pairwise connection is up or `timeout` passes.
    pub fn connect(
        entries: &[RankFileEntry],
        rank: Rank,
        timeout: Duration,
    ) -> Result<TcpMesh, TransportError> {
        TcpMesh::connect_with(entries, rank, timeout, None)
    }

    /// Like [`connect`](Self::connect), with an optionally pre-bound
    /// listener (tests bind port 0 first to dodge port races).
    pub fn connect_with(
        entries: &[RankFileEntry],
        rank: Rank,
        timeout: Duration,
        listener: Option<TcpListener>,
    ) -> Result<TcpMesh, TransportError> {
        let n = entries.len();
        assert!((rank as usize) < n, "rank {rank} not in rank file");
        let deadline = Instant::now() + timeout;
        let listener = match listener {
            Some(l) => l,
            None => TcpListener::bind(entries[rank as usize].addr())?,
        };

        let mut streams: Vec<Option<TcpStream>> = (0..n).map(|_| None).collect();

        // Dial everyone below us; they are listening (rank 0 first of all).
        for peer in entries.iter().take(rank as usize) {
            let stream = loop {
                match TcpStream::connect(peer.addr()) {
                    Ok(s) => break s,
                    Err(e) => {
                        if Instant::now() >= deadline {
                            return Err(TransportError::Io(e));
                        }
                        std::thread::sleep(Duration::from_millis(20));
                    }
                }
            };
            stream.set_nodelay(true)?;
            let mut s = stream;
            s.write_all(&rank.to_le_bytes())?;
            streams[peer.rank as usize] = Some(s);
        }

        // Accept everyone above us.
        let expected_accepts = n - rank as usize - 1;
        for _ in 0..expected_accepts {
            let (mut stream, _) = listener.accept()?;
            stream.set_nodelay(true)?;
            let mut id = [0u8; 2];
            stream.read_exact(&mut id)?;
            let peer_rank = Rank::from_le_bytes(id);
            if peer_rank as usize >= n || streams[peer_rank as usize].is_some() {
                return Err(TransportError::RankFile(format!(
                    "unexpected connection claiming rank {peer_rank}"
                )));
            }
            streams[peer_rank as usize] = Some(stream);
        }

        let (inbox_tx, inbox_rx) = mpsc::channel();
        let closing = Arc::new(AtomicBool::new(false));
        let mut peers: Vec<Option<Peer>> = Vec::with_capacity(n);
        for (peer_rank, slot) in streams.into_iter().enumerate() {
            let Some(stream) = slot else {
                peers.push(None);
                continue;
            };
            let (tx, rx) = mpsc::channel::<WriterCmd>();
            let mut wstream = stream.try_clone()?;
            let writer = std::thread::Builder::new()
                .name(format!("net-w{rank}->{peer_rank}"))
                .spawn(move || {
                    while let Ok(cmd) = rx.recv() {
                        match cmd {
                            WriterCmd::Frame(bytes) => {
                                if wstream.write_all(&bytes).is_err() {
                                    break;
                                }
                            }
                            WriterCmd::Flush(ack) => {
                                let _ = wstream.flush();
                                let _ = ack.send(());
                            }
                            WriterCmd::Shutdown => break,
                        }
                    }
                    let _ = wstream.flush();
                })
                .expect("spawn writer");

            let rstream = stream.try_clone()?;
            let tx_inbox = inbox_tx.clone();
            let closing_flag = Arc::clone(&closing);
            let reader = std::thread::Builder::new()
                .name(format!("net-r{rank}<-{peer_rank}"))
                .spawn(move || read_loop(rstream, tx_inbox, closing_flag))
                .expect("spawn reader");

            peers.push(Some(Peer {
                tx,
                stream,
                writer: Some(writer),
                reader: Some(reader),
            }));
        }
        drop(inbox_tx);

        Ok(TcpMesh {
            rank,
            peers,
            inbox: inbox_rx,
            closing,
            closed: false,
        })
    }
}

fn read_loop(
    mut stream: TcpStream,
    inbox: mpsc::Sender<Result<Message, TransportError>>,
    closing: Arc<AtomicBool>,
) {
    let mut buf = vec![0u8; HEADER_LEN];
    loop {
        // Header first; a clean EOF here is a normal peer departure.
        let mut filled = 0;
        while filled < HEADER_LEN {
            match stream.read(&mut buf[filled..HEADER_LEN]) {
                Ok(0) => {
                    if filled > 0 && !closing.load(Ordering::Relaxed) {
                        let _ = inbox.send(Err(TransportError::Io(std::io::Error::new(
                            std::io::ErrorKind::UnexpectedEof,
                            "mid-frame EOF",
                        ))));
                    }
                    return;
                }
                Ok(k) => filled += k,
                Err(e) => {
                    if !closing.load(Ordering::Relaxed) {
                        let _ = inbox.send(Err(TransportError::Io(e)));
                    }
                    return;
                }
            }
        }
        // Parse the header through the shared decoder for identical error
        // behavior, then pull the payload.
        let header: [u8; HEADER_LEN] = buf[..HEADER_LEN].try_into().unwrap();
        match decode_frame(&header, MAX_PAYLOAD_DEFAULT) {
            Err(e) => {
                let _ = inbox.send(Err(e));
                return;
            }
            Ok(Some((msg, _))) => {
                // Zero-payload frame; complete already.
                if inbox.send(Ok(msg)).is_err() {
                    return;
                }
            }
            Ok(None) => {
                let len = u32::from_le_bytes(header[3..7].try_into().unwrap()) as usize;
                let mut full = header.to_vec();
                full.resize(HEADER_LEN + len, 0);
                if let Err(e) = stream.read_exact(&mut full[HEADER_LEN..]) {
                    if !closing.load(Ordering::Relaxed) {
                        let _ = inbox.send(Err(TransportError::Io(e)));
                    }
                    return;
                }
                match decode_frame(&full, MAX_PAYLOAD_DEFAULT) {
                    Ok(Some((msg, _))) => {
                        if inbox.send(Ok(msg)).is_err() {
                            return;
                        }
                    }
                    Ok(None) => unreachable!("frame was sized exactly"),
                    Err(e) => {
                        let _ = inbox.send(Err(e));
                        return;
                    }
                }
            }
        }
    }
}

impl Transport for TcpMesh {
    fn rank(&self) -> Rank {
        self.rank
    }

    fn num_ranks(&self) -> u16 {
        self.peers.len() as u16
    }

    fn send_async(&mut self, dest: Rank, msg: Message) -> Result<(), TransportError> {
        if self.closed {
            return Err(TransportError::Closed);
        }
        let peer = self
            .peers
            .get(dest as usize)
            .and_then(|p| p.as_ref())
            .ok_or(TransportError::NoSuchRank(dest))?;
        if msg.payload.len() > MAX_PAYLOAD_DEFAULT {
            return Err(TransportError::PayloadTooLarge {
                len: msg.payload.len(),
                max: MAX_PAYLOAD_DEFAULT,
            });
        }
        let mut bytes = Vec::with_capacity(HEADER_LEN + msg.payload.len());
        encode_frame(&msg, &mut bytes);
        peer.tx
            .send(WriterCmd::Frame(bytes))
            .map_err(|_| TransportError::Closed)
    }

    fn try_receive(&mut self) -> Result<Option<Message>, TransportError> {
        match self.inbox.try_recv() {
            Ok(Ok(msg)) => Ok(Some(msg)),
            Ok(Err(e)) => Err(e),
            Err(mpsc::TryRecvError::Empty) => Ok(None),
            Err(mpsc::TryRecvError::Disconnected) => {
                if self.closing.load(Ordering::Relaxed) {
                    Ok(None)
                } else {
                    Err(TransportError::Closed)
                }
            }
        }
    }

    fn flush_outbound(&mut self) -> Result<(), TransportError> {
        for peer in self.peers.iter().flatten() {
            let (ack_tx, ack_rx) = mpsc::sync_channel(1);
            if peer.tx.send(WriterCmd::Flush(ack_tx)).is_ok() {
                let _ = ack_rx.recv();
            }
        }
        Ok(())
    }

    fn close(&mut self) -> Result<(), TransportError> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        self.flush_outbound()?;
        self.closing.store(true, Ordering::Relaxed);
        for peer in self.peers.iter_mut().flatten() {
            let _ = peer.tx.send(WriterCmd::Shutdown);
            if let Some(w) = peer.writer.take() {
                let _ = w.join();
            }
            let _ = peer.stream.shutdown(Shutdown::Both);
            if let Some(r) = peer.reader.take() {
                let _ = r.join();
            }
        }
        Ok(())
    }
}

impl Drop for TcpMesh {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::Tag;

    fn local_entries(n: u16) -> (Vec<RankFileEntry>, Vec<TcpListener>) {
        let mut entries = Vec::new();
        let mut listeners = Vec::new();
        for rank in 0..n {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            let port = l.local_addr().unwrap().port();
            entries.push(RankFileEntry { rank, host: "127.0.0.1".into(), port });
            listeners.push(l);
        }
        (entries, listeners)
    }

    #[test]
    fn rank_file_round_trip_and_validation() {
        let text = "# comment\n0 127.0.0.1 5000\n\n2 127.0.0.1 5002\n1 127.0.0.1 5001\n";
        let entries = parse_rank_file(text).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[2].port, 5002);
        let again = parse_rank_file(&format_rank_file(&entries)).unwrap();
        assert_eq!(again, entries);

        assert!(parse_rank_file("1 127.0.0.1 5000\n").is_err());
        assert!(parse_rank_file("0 127.0.0.1 notaport\n").is_err());
        assert!(parse_rank_file("").is_err());
    }

    #[test]
    fn three_rank_mesh_exchanges_messages() {
        let (entries, listeners) = local_entries(3);
        let mut handles = Vec::new();
        for (rank, listener) in listeners.into_iter().enumerate() {
            let entries = entries.clone();
            handles.push(std::thread::spawn(move || {
                let mut mesh = TcpMesh::connect_with(
                    &entries,
                    rank as Rank,
                    Duration::from_secs(5),
                    Some(listener),
                )
                .unwrap();
                // Everyone sends one frame to everyone else, then reads two.
                for dest in 0..3 {
                    if dest != rank {
                        mesh.send_async(
                            dest as Rank,
                            Message::work(rank as Rank, vec![rank as u8, dest as u8]),
                        )
                        .unwrap();
                    }
                }
                let mut got = Vec::new();
                let deadline = Instant::now() + Duration::from_secs(5);
                while got.len() < 2 {
                    assert!(Instant::now() < deadline, "rank {rank} starved");
                    match mesh.try_receive().unwrap() {
                        Some(m) => got.push(m),
                        None => std::thread::sleep(Duration::from_millis(1)),
                    }
                }
                for m in &got {
                    assert_eq!(m.tag, Tag::Work);
                    assert_eq!(m.payload[1], rank as u8, "misrouted frame");
                }
                mesh.close().unwrap();
                got.len()
            }));
        }
        for h in handles {
            assert_eq!(h.join().unwrap(), 2);
        }
    }

    #[test]
    fn pair_fifo_across_many_frames() {
        let (entries, mut listeners) = local_entries(2);
        let l1 = listeners.pop().unwrap();
        let l0 = listeners.pop().unwrap();
        let e2 = entries.clone();
        let sender = std::thread::spawn(move || {
            let mut mesh =
                TcpMesh::connect_with(&e2, 0, Duration::from_secs(5), Some(l0)).unwrap();
            for i in 0..500u16 {
                mesh.send_async(1, Message::work(0, i.to_le_bytes().to_vec())).unwrap();
            }
            mesh.flush_outbound().unwrap();
            // Hold the mesh open until the peer has read everything.
            std::thread::sleep(Duration::from_millis(300));
            mesh.close().unwrap();
        });
        let mut mesh =
            TcpMesh::connect_with(&entries, 1, Duration::from_secs(5), Some(l1)).unwrap();
        let mut expect = 0u16;
        let deadline = Instant::now() + Duration::from_secs(10);
        while expect < 500 {
            assert!(Instant::now() < deadline, "stalled at {expect}");
            match mesh.try_receive().unwrap() {
                Some(m) => {
                    let i = u16::from_le_bytes(m.payload[..2].try_into().unwrap());
                    assert_eq!(i, expect, "frames reordered");
                    expect += 1;
                }
                None => std::thread::sleep(Duration::from_millis(1)),
            }
        }
        sender.join().unwrap();
        mesh.close().unwrap();
    }
}
