"""tabbridge: file-bridge server for in-context tabular prediction.

Watches a directory for bridge requests (train.csv / test.csv / meta.json /
READY), runs a tabular backbone on each, and answers with predictions.csv
plus a DONE sentinel, or ERROR with a message. The only coupling to the
producing side is the wire format itself.
"""

from .backbones import BackboneError, BuiltinBackbone, resolve_backbone
from .protocol import (
    MAX_CLASSES,
    MAX_TRAIN_ROWS,
    LimitViolation,
    ProtocolError,
    Request,
    load_request,
    write_error,
    write_reply,
)
from .server import BridgeServer, serve_in_thread

__version__ = "0.1.0"
