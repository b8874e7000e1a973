import sys

from gammaops.cli import main

sys.exit(main())
