from . import default, fig1, fig2, fig3, region_check, custom
