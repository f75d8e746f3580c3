import os
import sys

# development layout: the compiled module lives in the CMake build tree and
# the package sources under python/
module_dir = os.environ.get("STEPDELAY_MODULE_DIR")
if module_dir:
    sys.path.insert(0, module_dir)
package_dir = os.path.join(os.path.dirname(__file__), "..", "..", "python")
sys.path.insert(0, os.path.abspath(package_dir))
