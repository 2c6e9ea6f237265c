import sys

from eoa.cli import main

sys.exit(main())
