import sys

from thzvr.cli import main

sys.exit(main())
