"""Locating external executables (encoders, decoders, VMAF scorers)."""

import os
import shlex
import shutil
import string

from .exceptions import ConfigError, ExecutableNotFoundError

# Extra directories searched before PATH, os.pathsep-separated.
TOOL_PATH_ENV = "RPP_TOOL_PATH"


def resolve_executable(name):
    """Absolute path of ``name``.

    Search order: ``$RPP_TOOL_PATH``, then ``PATH``. As a last resort
    ``ffmpeg`` falls back to the binary bundled with ``imageio-ffmpeg`` when
    that package is installed.
    """
    if os.sep in name or (os.altsep and os.altsep in name):
        if os.path.isfile(name) and os.access(name, os.X_OK):
            return os.path.abspath(name)
        raise ExecutableNotFoundError(f"executable not found: {name}")
    extra = os.environ.get(TOOL_PATH_ENV)
    if extra:
        found = shutil.which(name, path=extra)
        if found:
            return found
    found = shutil.which(name)
    if found:
        return found
    if name == "ffmpeg":
        try:
            import imageio_ffmpeg
        except ImportError:
            pass
        else:
            try:
                return imageio_ffmpeg.get_ffmpeg_exe()
            except RuntimeError:
                pass
    raise ExecutableNotFoundError(
        f"executable not found: {name} (searched ${TOOL_PATH_ENV} and PATH)"
    )


def template_fields(template):
    """Placeholder names used in a ``{name}``-style command template."""
    return {
        fname for _, fname, _, _ in string.Formatter().parse(template)
        if fname is not None
    }


def check_template(template, required, allowed, what="template"):
    try:
        fields = template_fields(template)
    except ValueError as exc:
        raise ConfigError(f"{what}: malformed template {template!r}: {exc}") from None
    unknown = sorted(f for f in fields if f not in allowed)
    if unknown:
        raise ConfigError(
            f"{what}: unknown placeholder {{{unknown[0]}}}; allowed: "
            + ", ".join("{%s}" % a for a in sorted(allowed))
        )
    missing = sorted(f for f in required if f not in fields)
    if missing:
        raise ConfigError(f"{what}: missing required placeholder {{{missing[0]}}}")
    if not shlex.split(template):
        raise ConfigError(f"{what}: empty command")


def render_command(template, **values):
    """Split a template into argv, substitute placeholders, resolve argv[0]."""
    argv = [tok.format(**values) for tok in shlex.split(template)]
    argv[0] = resolve_executable(argv[0])
    return argv
