//! In-process and TCP transports. Both move encoded frames, so every byte a
//! sampler ships passes through the same codec regardless of transport.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::thread;

use crossbeam_channel::{bounded, unbounded, Receiver, Sender, TryRecvError};

use super::message::{Message, MessageKind, HEADER_LEN};
use crate::error::{Error, Result};

/// Sampler side of the bus.
pub trait Link: Send {
    fn send(&mut self, msg: Message) -> Result<()>;
    /// Blocks until a message arrives.
    fn recv(&mut self) -> Result<Message>;
    fn try_recv(&mut self) -> Result<Option<Message>>;
}

/// Trainer side of the bus.
pub trait Hub: Send {
    /// Next message from any worker, tagged with the worker index.
    fn recv(&mut self) -> Result<(usize, Message)>;
    fn send_to(&mut self, worker: usize, msg: Message) -> Result<()>;
    fn workers(&self) -> usize;

    fn broadcast(&mut self, msg: Message) -> Result<()> {
        for w in 0..self.workers() {
            self.send_to(w, msg.clone())?;
        }
        Ok(())
    }
}

fn stamp(counter: &mut u64, mut msg: Message) -> Vec<u8> {
    *counter += 1;
    msg.sequence = *counter;
    msg.encode()
}

fn decode_checked(bytes: &[u8], last: &mut u64) -> Result<Message> {
    let msg = Message::decode(bytes)?;
    if msg.sequence <= *last {
        return Err(Error::decode(7, format!("sequence {} not above {}", msg.sequence, last)));
    }
    *last = msg.sequence;
    Ok(msg)
}

type Frame = (usize, Vec<u8>);

/// Frames each worker may have queued towards the trainer before its sends
/// block, so samplers cannot run arbitrarily far ahead of the learner.
pub const UPSTREAM_FRAMES_PER_WORKER: usize = 4;

fn closed() -> Error {
    Error::Disconnected("peer hung up".into())
}

pub struct ChannelLink {
    worker: usize,
    up: Sender<Frame>,
    down: Receiver<Vec<u8>>,
    sent: u64,
    last_seen: u64,
}

pub struct ChannelHub {
    up: Receiver<Frame>,
    down: Vec<Sender<Vec<u8>>>,
    sent: u64,
    last_seen: Vec<u64>,
}

/// In-process bus over crossbeam channels of encoded frames.
pub fn channel_bus(workers: usize) -> (ChannelHub, Vec<ChannelLink>) {
    let (up_tx, up_rx) = bounded(UPSTREAM_FRAMES_PER_WORKER * workers.max(1));
    let mut down = Vec::with_capacity(workers);
    let mut links = Vec::with_capacity(workers);
    for worker in 0..workers {
        let (tx, rx) = unbounded();
        down.push(tx);
        links.push(ChannelLink {
            worker,
            up: up_tx.clone(),
            down: rx,
            sent: 0,
            last_seen: 0,
        });
    }
    let hub = ChannelHub {
        up: up_rx,
        down,
        sent: 0,
        last_seen: vec![0; workers],
    };
    (hub, links)
}

impl Link for ChannelLink {
    fn send(&mut self, msg: Message) -> Result<()> {
        let bytes = stamp(&mut self.sent, msg);
        self.up.send((self.worker, bytes)).map_err(|_| closed())
    }

    fn recv(&mut self) -> Result<Message> {
        let bytes = self.down.recv().map_err(|_| closed())?;
        decode_checked(&bytes, &mut self.last_seen)
    }

    fn try_recv(&mut self) -> Result<Option<Message>> {
        match self.down.try_recv() {
            Ok(bytes) => decode_checked(&bytes, &mut self.last_seen).map(Some),
            Err(TryRecvError::Empty) => Ok(None),
            Err(TryRecvError::Disconnected) => Err(closed()),
        }
    }
}

impl Hub for ChannelHub {
    fn recv(&mut self) -> Result<(usize, Message)> {
        let (worker, bytes) = self.up.recv().map_err(|_| closed())?;
        let msg = decode_checked(&bytes, &mut self.last_seen[worker])?;
        Ok((worker, msg))
    }

    fn send_to(&mut self, worker: usize, msg: Message) -> Result<()> {
        let bytes = stamp(&mut self.sent, msg);
        let tx = self.down.get(worker).ok_or(Error::IndexOutOfRange {
            index: worker,
            size: self.down.len(),
        })?;
        // A worker that already exited is not an error for the trainer.
        let _ = tx.send(bytes);
        Ok(())
    }

    fn workers(&self) -> usize {
        self.down.len()
    }
}

/// Reads one length-prefixed frame; `Ok(None)` on clean end of stream.
pub fn read_frame(stream: &mut impl Read) -> Result<Option<Vec<u8>>> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        let n = stream.read(&mut header[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(Error::decode(filled, "stream ended inside a frame header"));
        }
        filled += n;
    }
    let (_, _, len) = Message::decode_header(&header)?;
    let mut frame = header.to_vec();
    frame.resize(HEADER_LEN + len, 0);
    stream
        .read_exact(&mut frame[HEADER_LEN..])
        .map_err(|_| Error::decode(HEADER_LEN, "stream ended inside a payload"))?;
    Ok(Some(frame))
}

fn spawn_reader(mut stream: TcpStream, tag: usize, tx: Sender<Frame>) {
    thread::spawn(move || {
        while let Ok(Some(frame)) = read_frame(&mut stream) {
            if tx.send((tag, frame)).is_err() {
                break;
            }
        }
    });
}

pub struct TcpLink {
    stream: TcpStream,
    down: Receiver<Frame>,
    sent: u64,
    last_seen: u64,
}

impl TcpLink {
    /// Connects and announces the worker index with a heartbeat.
    pub fn connect(addr: impl ToSocketAddrs, worker: u32) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let (tx, rx) = unbounded();
        spawn_reader(stream.try_clone()?, 0, tx);
        let mut link = TcpLink {
            stream,
            down: rx,
            sent: 0,
            last_seen: 0,
        };
        link.send(Message::heartbeat(worker))?;
        Ok(link)
    }
}

impl Link for TcpLink {
    fn send(&mut self, msg: Message) -> Result<()> {
        let bytes = stamp(&mut self.sent, msg);
        self.stream.write_all(&bytes).map_err(|_| closed())
    }

    fn recv(&mut self) -> Result<Message> {
        let (_, bytes) = self.down.recv().map_err(|_| closed())?;
        decode_checked(&bytes, &mut self.last_seen)
    }

    fn try_recv(&mut self) -> Result<Option<Message>> {
        match self.down.try_recv() {
            Ok((_, bytes)) => decode_checked(&bytes, &mut self.last_seen).map(Some),
            Err(TryRecvError::Empty) => Ok(None),
            Err(TryRecvError::Disconnected) => Err(closed()),
        }
    }
}

pub struct TcpHub {
    listener: TcpListener,
    streams: Vec<Option<TcpStream>>,
    up_tx: Sender<Frame>,
    up: Receiver<Frame>,
    sent: u64,
    last_seen: Vec<u64>,
}

impl TcpHub {
    pub fn bind(addr: impl ToSocketAddrs, workers: usize) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let (up_tx, up) = bounded(UPSTREAM_FRAMES_PER_WORKER * workers.max(1));
        Ok(TcpHub {
            listener,
            streams: (0..workers).map(|_| None).collect(),
            up_tx,
            up,
            sent: 0,
            last_seen: vec![0; workers],
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts one connection per worker; each must open with a heartbeat
    /// naming its index.
    pub fn accept_all(&mut self) -> Result<()> {
        let mut pending = self.streams.iter().filter(|s| s.is_none()).count();
        while pending > 0 {
            let (mut stream, _) = self.listener.accept()?;
            stream.set_nodelay(true)?;
            let frame = read_frame(&mut stream)?.ok_or_else(closed)?;
            let hello = Message::decode(&frame)?;
            if hello.kind != MessageKind::Heartbeat {
                return Err(Error::InvalidArgument(format!("expected heartbeat, got {:?}", hello.kind)));
            }
            let worker = hello.heartbeat_worker()? as usize;
            let size = self.streams.len();
            let slot = self
                .streams
                .get_mut(worker)
                .ok_or(Error::IndexOutOfRange { index: worker, size })?;
            if slot.is_some() {
                return Err(Error::InvalidArgument(format!("worker {worker} connected twice")));
            }
            self.last_seen[worker] = hello.sequence;
            spawn_reader(stream.try_clone()?, worker, self.up_tx.clone());
            *slot = Some(stream);
            pending -= 1;
        }
        Ok(())
    }
}

impl Hub for TcpHub {
    fn recv(&mut self) -> Result<(usize, Message)> {
        let (worker, bytes) = self.up.recv().map_err(|_| closed())?;
        let msg = decode_checked(&bytes, &mut self.last_seen[worker])?;
        Ok((worker, msg))
    }

    fn send_to(&mut self, worker: usize, msg: Message) -> Result<()> {
        let size = self.streams.len();
        let stream = self
            .streams
            .get_mut(worker)
            .ok_or(Error::IndexOutOfRange { index: worker, size })?;
        let bytes = stamp(&mut self.sent, msg);
        if let Some(s) = stream {
            let _ = s.write_all(&bytes);
        }
        Ok(())
    }

    fn workers(&self) -> usize {
        self.streams.len()
    }
}
