import numbers
import subprocess
import warnings


def format_value(value):
    """Integers print as integers, reals with full round-trip precision."""
    if isinstance(value, (bool, numbers.Integral)):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return repr(float(value))
    return str(value)


class CSVData:
    """
    Class to organize output csv file, one row per call to `write`
    """
    def __init__(self, fout):
        self.name = fout
        self._fout = None
        self._columns = None
        self._dict = {}

    def record(self, input_dict):
        self._dict = input_dict.copy()

    def write(self):
        if self._columns is None:
            self._fout = open(self.name, 'w', newline='')
            self._columns = list(self._dict.keys())
            self._fout.write(','.join(self._columns) + '\n')
        if list(self._dict.keys()) != self._columns:
            raise ValueError(f"row columns {list(self._dict.keys())} differ from header {self._columns}")
        self._fout.write(','.join(format_value(v) for v in self._dict.values()) + '\n')

    def flush(self):
        if self._fout:
            self._fout.flush()

    def close(self):
        if self._fout is not None:
            self._fout.close()
            self._fout = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def get_git_version(path):
    try:
        git_version = subprocess.check_output(['git', '-C', path, 'describe', '--always', '--long', '--tags', '--dirty'],
                                              stderr=subprocess.PIPE)
    except (subprocess.CalledProcessError, FileNotFoundError) as e:
        if isinstance(e, subprocess.CalledProcessError) and b"not a git repository" in e.stderr:
            warnings.warn("WARNING: Path is not in a git repository so version tracking is not available.", stacklevel=2)
        else:
            warnings.warn("WARNING: Error when attempting to check git version so version tracking is not available.",
                          stacklevel=2)
        return None
    else:
        git_version = git_version.decode().strip()
        if "-dirty" in git_version:
            warnings.warn("WARNING: The git repository has uncommitted changes. Please commit changes before running"
                          " experiments for reproducible results", stacklevel=2)
        return git_version
