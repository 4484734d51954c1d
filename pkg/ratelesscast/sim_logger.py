import collections
import datetime
import logging

TRACE_DUMP_ID = "ratelesscast.trace_dump"
TRACE_BUFFER_LINES = 200


def sim_logger(id, lvl=None):
    return SimLogger(id, lvl=lvl)


class SimLogger(object):
    """
    Wraps a regular python logger. On top of the usual levels a message can be
    copied into a shared ring buffer of slot traces, which is dumped when a run
    aborts so the last slots before the failure end up in the log file.
    """

    TRACE_DUMP_ID = TRACE_DUMP_ID

    trace_buffer = collections.deque(maxlen=TRACE_BUFFER_LINES)

    def __init__(self, id, lvl=None):
        self.id = id
        self.name = id.replace("ratelesscast.", "")
        self.logger = logging.getLogger(id)
        if lvl is not None:
            self.logger.setLevel(lvl)

    def debug(self, msg, *args, **kw):
        self.log(logging.DEBUG, msg, *args, **kw)

    def info(self, msg, *args, **kw):
        self.log(logging.INFO, msg, *args, **kw)

    def warning(self, msg, *args, **kw):
        self.log(logging.WARNING, msg, *args, **kw)

    def error(self, msg, *args, **kw):
        self.log(logging.ERROR, msg, *args, **kw)

    def exception(self, msg, *args, **kw):
        kw.setdefault("exc_info", True)
        self.log(logging.ERROR, msg, *args, **kw)

    def trace(self, msg, *args):
        """Records the line in the trace buffer only, no handler sees it."""
        SimLogger.trace_buffer.append(self._trace_line(msg, args))

    def log(self, level, msg, *args, **kw):
        """
        Same as ``logging.Logger.log`` with two extra keywords:
        :param trace: also append the message to the slot trace buffer
        :param trace_dump: dump (and empty) the slot trace buffer afterwards
        """
        if kw.pop("trace", False):
            self.trace(msg, *args)
        dump = kw.pop("trace_dump", False)
        self.logger.log(level, msg, *args, **kw)
        if dump:
            self.dump_trace_buffer(level)

    def dump_trace_buffer(self, level=logging.INFO):
        """Logs every buffered trace line through the trace dump logger and empties the buffer."""
        lines = list(SimLogger.trace_buffer)
        SimLogger.trace_buffer.clear()
        out = logging.getLogger(TRACE_DUMP_ID)
        out.log(level, " ******* Dumping slot trace (len: %s, from: %s)", len(lines), self.name)
        for line in lines:
            out.log(level, line)
        return lines

    def _trace_line(self, msg, args):
        if args:
            msg = msg % args
        stamp = datetime.datetime.now().strftime("%H:%M:%S.%f")[:-3]
        return "{} {}: {}".format(stamp, self.name, msg)
