"""In-sandbox harness: runs one candidate program invocation per process.

Reads exactly one JSON request line from stdin:
    {"source": ..., "entry": ..., "input": ..., "domain": "grid"|"text"|"intlist"}
and writes exactly one JSON response line to the original stdout:
    {"status": "ok", "output": ...}
    {"status": "error", "type": ..., "message": ..., "traceback": ...}

Candidate stdout/stderr are redirected to files in the working directory so
hostile prints can never corrupt the protocol channel. Imports are limited to
the standard library plus numpy; sockets, subprocesses, and writes outside
the working directory are disabled.

Deliberately import-light at startup: launched once per case, so interpreter
startup dominates the cost.
"""

import builtins
import io
import json
import os
import sys
import traceback

_SCRATCH = os.path.realpath(os.getcwd())
_REAL_OPEN = builtins.open
_REAL_OS_OPEN = os.open


def _install_guards():
    import socket
    import subprocess

    def _blocked(*_a, **_k):
        raise PermissionError("operation disabled in sandbox")

    socket.socket = _blocked
    socket.create_connection = _blocked
    socket.socketpair = _blocked
    subprocess.Popen = _blocked
    subprocess.run = _blocked
    subprocess.call = _blocked
    subprocess.check_call = _blocked
    subprocess.check_output = _blocked
    os.system = _blocked
    os.popen = _blocked
    for name in [n for n in dir(os) if n.startswith(("exec", "spawn", "fork"))]:
        setattr(os, name, _blocked)

    def _inside_scratch(path) -> bool:
        try:
            real = os.path.realpath(os.fspath(path))
        except TypeError:
            real = os.path.realpath(str(path))
        return real == _SCRATCH or real.startswith(_SCRATCH + os.sep)

    def guarded_open(file, mode="r", *args, **kwargs):
        if any(c in str(mode) for c in "wax+") and not _inside_scratch(file):
            raise PermissionError(f"write outside sandbox scratch: {file}")
        return _REAL_OPEN(file, mode, *args, **kwargs)

    _WRITE_FLAGS = os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_APPEND | os.O_TRUNC

    def guarded_os_open(path, flags, *args, **kwargs):
        if kwargs.get("dir_fd") is not None:
            raise PermissionError("dir_fd-relative open disabled in sandbox")
        if flags & _WRITE_FLAGS and not _inside_scratch(path):
            raise PermissionError(f"write outside sandbox scratch: {path}")
        return _REAL_OS_OPEN(path, flags, *args, **kwargs)

    builtins.open = guarded_open
    io.open = guarded_open
    os.open = guarded_os_open

    def _guard_path_fn(fn, n_paths):
        def wrapper(*args, **kwargs):
            # dir_fd-relative paths would dodge the realpath check below
            if any(kwargs.get(k) is not None
                   for k in ("dir_fd", "src_dir_fd", "dst_dir_fd")):
                raise PermissionError("dir_fd-relative operation disabled in sandbox")
            for p in args[:n_paths]:
                if not _inside_scratch(p):
                    raise PermissionError(f"path operation outside sandbox scratch: {p}")
            return fn(*args, **kwargs)
        return wrapper

    # destructive/mutating path operations stay inside the scratch dir
    for fn_name, n_paths in [("remove", 1), ("unlink", 1), ("rmdir", 1),
                             ("truncate", 1), ("mkdir", 1), ("makedirs", 1),
                             ("rename", 2), ("replace", 2), ("symlink", 2),
                             ("link", 2), ("chmod", 1), ("utime", 1)]:
        if hasattr(os, fn_name):
            setattr(os, fn_name, _guard_path_fn(getattr(os, fn_name), n_paths))

    allowed_roots = set(sys.stdlib_module_names) | {"numpy"}
    real_import = builtins.__import__

    def guarded_import(name, globals=None, locals=None, fromlist=(), level=0):
        # Relative imports (level > 0) stay inside an already-allowed package.
        root = name.split(".")[0]
        if level == 0 and root and root not in allowed_roots:
            raise ImportError(f"import of {root!r} not allowed in sandbox")
        return real_import(name, globals, locals, fromlist, level)

    builtins.__import__ = guarded_import


def _set_memory_limit():
    mem_mb = os.environ.get("HS_MEM_MB")
    if not mem_mb:
        return
    try:
        import resource
        limit = int(mem_mb) * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
    except (ImportError, ValueError, OSError):
        pass


def _coerce_output(value):
    """Coerce guest containers/numerics to plain JSON shapes."""
    try:
        import numpy as np
        if isinstance(value, np.ndarray):
            value = value.tolist()
        elif isinstance(value, np.generic):
            value = value.item()
    except ImportError:
        pass
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_coerce_output(v) for v in value]
    return value


def _error_response(exc_type: str, message: str, tb: str = "") -> dict:
    return {"status": "error", "type": exc_type, "message": message, "traceback": tb}


def _run(request: dict) -> dict:
    for key in ("source", "entry", "input", "domain"):
        if key not in request:
            return _error_response("ProtocolError", f"request missing {key!r}")
    source = request["source"]
    entry = request["entry"]
    domain = request["domain"]
    if domain not in ("grid", "text", "intlist"):
        return _error_response("ProtocolError", f"unknown domain {domain!r}")

    guest_globals = {"__name__": "__candidate__"}
    # Typing names appear in generated signatures and are evaluated at def time.
    import typing
    for name in ("List", "Dict", "Tuple", "Optional", "Set", "Any", "Union"):
        guest_globals[name] = getattr(typing, name)

    wants_numpy = "np" in source or "numpy" in source
    np = None
    if wants_numpy or domain == "grid":
        try:
            import numpy as np  # noqa: F811
            guest_globals["np"] = np
            guest_globals["numpy"] = np
        except ImportError:
            np = None

    try:
        code = compile(source, "<candidate>", "exec")
    except SyntaxError as e:
        return _error_response("SyntaxError", str(e))

    try:
        exec(code, guest_globals)
    except BaseException as e:
        return _error_response(type(e).__name__, str(e), traceback.format_exc())

    fn = guest_globals.get(entry)
    if not callable(fn):
        return _error_response("MissingEntryPoint", f"function {entry!r} is not defined")

    value = request["input"]
    if domain == "grid" and np is not None:
        value = np.array(value, dtype=int)

    try:
        result = fn(value)
    except BaseException as e:
        return _error_response(type(e).__name__, str(e), traceback.format_exc())

    try:
        output = _coerce_output(result)
        json.dumps(output)
    except (TypeError, ValueError, RecursionError) as e:
        return _error_response("OutputEncodingError", f"output not JSON-encodable: {e}")
    return {"status": "ok", "output": output}


def main() -> int:
    line = sys.stdin.readline()

    # Keep a private handle on the protocol channel, then point fd 1 at a
    # capture file so even C-level writes from the candidate are diverted.
    protocol = os.fdopen(os.dup(1), "w")
    capture = _REAL_OPEN(os.path.join(_SCRATCH, "candidate_stdout.txt"), "w")
    os.dup2(capture.fileno(), 1)
    sys.stdout = capture
    err_capture = _REAL_OPEN(os.path.join(_SCRATCH, "candidate_stderr.txt"), "w")
    os.dup2(err_capture.fileno(), 2)
    sys.stderr = err_capture

    _set_memory_limit()
    _install_guards()

    try:
        request = json.loads(line)
        if not isinstance(request, dict):
            raise ValueError("request is not an object")
    except ValueError as e:
        response = _error_response("ProtocolError", f"bad request line: {e}")
    else:
        try:
            response = _run(request)
        except BaseException as e:  # shim bug or resource kill: still answer
            response = _error_response(type(e).__name__, str(e), traceback.format_exc())

    protocol.write(json.dumps(response) + "\n")
    protocol.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
