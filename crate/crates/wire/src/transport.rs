//! Message channels over ordered byte streams.
//!
//! [`FramedChannel`] speaks the frame protocol over anything `Read + Write`,
//! counting bytes in each direction and optionally recording raw traces.
//! TCP sockets and [`PipeEnd`] (an in-process duplex pipe) plug in
//! unchanged, so both transports produce byte-identical message streams.

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::net::TcpStream;
use std::sync::{Arc, Condvar, Mutex};

use crate::frame::{frame_decode_with_cap, frame_encode, MAX_PAYLOAD_DEFAULT};
use crate::message::Message;
use crate::Result;

/// Raw bytes seen by one side of a channel, for trace comparison.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelTrace {
    pub sent: Vec<u8>,
    pub received: Vec<u8>,
}

/// A reliable, ordered message channel.
pub trait Channel: Send {
    fn send(&mut self, msg: &Message) -> Result<()>;
    fn recv(&mut self) -> Result<Message>;
    fn bytes_sent(&self) -> u64;
    fn bytes_received(&self) -> u64;
    /// Snapshot of the raw byte trace, when tracing is enabled.
    fn trace(&self) -> Option<ChannelTrace>;
}

/// Frame codec over a byte stream with byte accounting and optional tracing.
pub struct FramedChannel<S> {
    stream: S,
    max_payload: u64,
    sent: u64,
    received: u64,
    trace: Option<ChannelTrace>,
}

impl<S: Read + Write + Send> FramedChannel<S> {
    pub fn new(stream: S) -> Self {
        Self {
            stream,
            max_payload: MAX_PAYLOAD_DEFAULT,
            sent: 0,
            received: 0,
            trace: None,
        }
    }

    pub fn with_tracing(mut self) -> Self {
        self.trace = Some(ChannelTrace::default());
        self
    }

    pub fn with_max_payload(mut self, cap: u64) -> Self {
        self.max_payload = cap;
        self
    }
}

/// Read adapter that tees every byte into the receive trace and counter.
struct CountingReader<'a, S> {
    inner: &'a mut S,
    received: &'a mut u64,
    trace: Option<&'a mut Vec<u8>>,
}

impl<S: Read> Read for CountingReader<'_, S> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        *self.received += n as u64;
        if let Some(trace) = self.trace.as_mut() {
            trace.extend_from_slice(&buf[..n]);
        }
        Ok(n)
    }
}

impl<S: Read + Write + Send> Channel for FramedChannel<S> {
    fn send(&mut self, msg: &Message) -> Result<()> {
        let bytes = frame_encode(msg);
        self.stream.write_all(&bytes)?;
        self.stream.flush()?;
        self.sent += bytes.len() as u64;
        if let Some(trace) = self.trace.as_mut() {
            trace.sent.extend_from_slice(&bytes);
        }
        Ok(())
    }

    fn recv(&mut self) -> Result<Message> {
        let mut reader = CountingReader {
            inner: &mut self.stream,
            received: &mut self.received,
            trace: self.trace.as_mut().map(|t| &mut t.received),
        };
        frame_decode_with_cap(&mut reader, self.max_payload)
    }

    fn bytes_sent(&self) -> u64 {
        self.sent
    }

    fn bytes_received(&self) -> u64 {
        self.received
    }

    fn trace(&self) -> Option<ChannelTrace> {
        self.trace.clone()
    }
}

/// Convenience constructors for the two stream types actually used.
impl FramedChannel<TcpStream> {
    pub fn tcp(stream: TcpStream) -> Self {
        stream.set_nodelay(true).ok();
        Self::new(stream)
    }
}

#[derive(Default)]
struct PipeState {
    buf: VecDeque<u8>,
    closed: bool,
}

type SharedPipe = Arc<(Mutex<PipeState>, Condvar)>;

/// One end of an in-process duplex byte pipe. Reads block until data or EOF;
/// writes never block (the buffer is unbounded).
pub struct PipeEnd {
    incoming: SharedPipe,
    outgoing: SharedPipe,
}

/// Creates a connected pair of pipe ends.
pub fn duplex_pipe() -> (PipeEnd, PipeEnd) {
    let a: SharedPipe = Arc::new((Mutex::new(PipeState::default()), Condvar::new()));
    let b: SharedPipe = Arc::new((Mutex::new(PipeState::default()), Condvar::new()));
    (
        PipeEnd {
            incoming: Arc::clone(&a),
            outgoing: Arc::clone(&b),
        },
        PipeEnd {
            incoming: b,
            outgoing: a,
        },
    )
}

impl Read for PipeEnd {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        let (lock, cond) = &*self.incoming;
        let mut state = lock.lock().unwrap();
        while state.buf.is_empty() {
            if state.closed {
                return Ok(0); // EOF
            }
            state = cond.wait(state).unwrap();
        }
        let take = buf.len().min(state.buf.len());
        for (dst, src) in buf.iter_mut().zip(state.buf.drain(..take)) {
            *dst = src;
        }
        Ok(take)
    }
}

impl Write for PipeEnd {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let (lock, cond) = &*self.outgoing;
        let mut state = lock.lock().unwrap();
        if state.closed {
            return Err(io::Error::new(
                io::ErrorKind::BrokenPipe,
                "peer closed the pipe",
            ));
        }
        state.buf.extend(buf);
        cond.notify_one();
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Drop for PipeEnd {
    fn drop(&mut self) {
        for pipe in [&self.incoming, &self.outgoing] {
            let (lock, cond) = &**pipe;
            lock.lock().unwrap().closed = true;
            cond.notify_all();
        }
    }
}
