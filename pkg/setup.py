from setuptools import setup

setup(name='pacm',
      version='0.1',
      description='topology optimization of pressure-actuated compliant mechanisms',
      license='GPL',
      packages=['pacm'],
      install_requires=[
          'numpy',
          'scipy',
          'matplotlib',
          'tqdm']
      ,
      entry_points={'console_scripts': ['pacm=pacm.cli:main']},
      zip_safe=False
      )
